//! Monte-Carlo covariances of (f, J) over random two-layer ReLU networks,
//! compared with the closed-form limit kernels.

use bntk::verify::{mc_covariance_deviations, random_input_pairs, CovKind};

fn main() -> bntk::Result<()> {
    let pairs = random_input_pairs(3, 3, 1);
    for n in [100, 1000] {
        let reports = mc_covariance_deviations(&CovKind::ALL, &pairs, n, 2000, 5)?;
        for r in reports {
            println!("n={n:<5} {:<2} pair {}  deviation {:.4} ± {:.4}", r.kind, r.pair_id, r.deviation, r.stderr);
        }
    }
    Ok(())
}
