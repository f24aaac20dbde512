//! Residuals of the f, g and J evolution equations along gradient descent
//! of finite four-layer ReLU and linear networks. The ReLU J residual is
//! the noisiest of the three.

use bntk::verify::{finite_residuals, linear_residuals, LinearMode, ResidualConfig, ResidualSeries};

fn report(label: &str, series: &[ResidualSeries], steps: usize) {
    for s in series {
        println!("{label:<14} {}  median {:.4}  max {:.4}", s.quantity, s.median(steps).unwrap_or(f64::NAN), s.max().unwrap_or(f64::NAN));
    }
}

fn main() -> bntk::Result<()> {
    for width in [500, 4000, 20_000] {
        let cfg = ResidualConfig {
            steps: 20,
            ..ResidualConfig::relu(width)
        };
        report(&format!("relu n={width}"), &finite_residuals(&cfg)?, cfg.steps);
    }
    let cfg = ResidualConfig {
        steps: 20,
        ..ResidualConfig::relu(2000)
    };
    report("linear n=2000", &linear_residuals(LinearMode::Deep4, &cfg)?, cfg.steps);
    Ok(())
}
