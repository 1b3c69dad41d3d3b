//! The bandit task: context schedule, reversals and the three observation
//! modalities, driven by a fixed action pattern.

use value_profiles::{Action, Environment, TaskConfig};

fn main() -> value_profiles::Result<()> {
    let task = TaskConfig {
        seed: 3,
        ..TaskConfig::default()
    };
    let mut env = Environment::new(task.clone())?;

    println!("block  trials     context   better arm by trial");
    for block in 0..task.n_trials / task.context_block_len {
        let start = block * task.context_block_len;
        let slice = &env.schedule()[start..start + task.context_block_len];
        let arms: String = slice
            .iter()
            .map(|s| if s.better_arm.name() == "left" { 'L' } else { 'R' })
            .collect();
        println!(
            "{block:>5}  {start:>3}-{:<3}    {:<8}  {arms}",
            start + task.context_block_len - 1,
            slice[0].context.name()
        );
    }

    println!("\nfirst trials with a cycling action pattern:");
    for t in 0..8 {
        let action = Action::ALL[t % 4];
        let state = env.state().expect("task not finished");
        let obs = env.step(action)?;
        println!(
            "t={t} {:<8} better={:<5} -> hint={:<10} reward={:<4} echo={}",
            state.context.name(),
            state.better_arm.name(),
            obs.hint.name(),
            obs.reward.name(),
            obs.choice.name()
        );
    }
    Ok(())
}
