//! Minimize the 10-dimensional sphere with the puffin optimizer.
//!
//!     cargo run --example apo_sphere -- [seed]

use puffin_sentiment::puffin::{optimize, Bounds, SwarmConfig};

fn main() -> puffin_sentiment::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let bounds = Bounds::uniform(10, -5.0, 5.0)?;
    let config = SwarmConfig {
        pop_size: 30,
        max_iters: 500,
        seed,
        ..SwarmConfig::default()
    };
    let result = optimize(|x: &[f64]| x.iter().map(|v| v * v).sum(), &bounds, &config)?;
    for (iter, (best, mean)) in result.history.iter().zip(&result.mean_history).enumerate() {
        if iter % 50 == 0 || iter == config.max_iters {
            println!("iter {iter:>3}  best {best:.3e}  mean {mean:.3e}");
        }
    }
    println!("{} evaluations, best {:.3e}", result.evaluations.len(), result.best_fitness);
    let x: Vec<String> = result.best_position.iter().map(|v| format!("{v:.4}")).collect();
    println!("x* = [{}]", x.join(", "));
    Ok(())
}
