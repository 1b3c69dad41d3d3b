//! Expected free energy of the four actions for a few belief states, and
//! how precision and a policy prior reshape the resulting posterior.

use value_profiles::agents::PREFERENCES;
use value_profiles::beliefs::FactorizedBeliefs;
use value_profiles::policy::{expected_free_energy, policy_posterior};
use value_profiles::{Action, GenerativeModel, ModelHyperParams, TaskConfig};

fn main() -> value_profiles::Result<()> {
    let model = GenerativeModel::new(&TaskConfig::default(), ModelHyperParams::default())?;
    let states = [
        ("uncertain arm, volatile", [0.9, 0.1], [0.5, 0.5]),
        ("confident left, stable", [0.1, 0.9], [0.95, 0.05]),
        ("leaning left, volatile", [0.9, 0.1], [0.7, 0.3]),
    ];
    for (name, context, arm) in states {
        let b = FactorizedBeliefs {
            context,
            arm,
            choice: [1.0, 0.0, 0.0, 0.0],
        };
        let t = expected_free_energy(&b, &model, &PREFERENCES);
        let g = t.g();
        println!("{name}");
        println!("  action  risk     cost     info gain  G");
        for a in Action::ALL {
            let i = a.index();
            println!(
                "  {:<6}  {:<7.4}  {:<7.4}  {:<9.4}  {:.4}",
                a.name(),
                t.risk[i],
                t.expected_cost[i],
                t.info_gain[i],
                g[i]
            );
        }
        for (gamma, xi) in [(1.0, [0.0; 4]), (4.0, [0.0; 4]), (2.5, [0.0, 3.0, 0.0, 0.0])] {
            let p = policy_posterior(&g, &xi, gamma)?;
            println!("  gamma={gamma:<3} xi_hint={:<3} p = {p:.3?}", xi[1]);
        }
        println!();
    }
    Ok(())
}
