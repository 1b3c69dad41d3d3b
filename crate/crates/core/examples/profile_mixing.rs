//! Value profiles: context beliefs pooled through the assignment matrix
//! into profile weights, then mixed into effective trial parameters.

use value_profiles::agents::{M3_BASE_XI, PREFERENCES};
use value_profiles::profiles::{mix, profile_weights, AssignmentMatrix, ValueProfile};

fn main() -> value_profiles::Result<()> {
    let hint_scale = 2.0;
    let profiles = vec![
        ValueProfile::new(PREFERENCES, M3_BASE_XI[0].map(|x| x * hint_scale), 5.0)?,
        ValueProfile::new(PREFERENCES, M3_BASE_XI[1].map(|x| x * hint_scale), 5.0)?,
    ];
    let z = AssignmentMatrix::identity(2);
    let soft = AssignmentMatrix::new(vec![vec![0.8, 0.2], vec![0.3, 0.7]])?;

    println!("q(volatile)  Z         w0     xi_hint  gamma");
    for q in [1.0, 0.8, 0.58, 0.5, 0.2, 0.0] {
        for (label, zm) in [("identity", &z), ("soft", &soft)] {
            let w = profile_weights(&[q, 1.0 - q], zm)?;
            let eff = mix(&profiles, &w)?;
            println!(
                "{q:<11}  {label:<8}  {:.3}  {:<7.3}  {:.2}",
                w[0], eff.xi_eff[1], eff.gamma_eff
            );
        }
    }
    Ok(())
}
