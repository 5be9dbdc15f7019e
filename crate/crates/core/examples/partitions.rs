//! Exchangeable partitions: EPPFs, sequential draws and cluster growth.
//!
//! cargo run --example partitions

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bnpmot::partition::{
    enumerate_partitions, eppf_dp, eppf_py, sample_block_counts, sample_crp, stick_break_py, EppfVariant,
    PartitionSizes, PyParams,
};

fn main() -> bnpmot::Result<()> {
    let n = 4;
    let alpha = 1.0;
    let py = PyParams::new(0.5, alpha)?;
    println!("partitions of {n} items under DP({alpha}) and PY(0.5, {alpha}):");
    let mut total = (0.0, 0.0);
    for rgs in enumerate_partitions(n)? {
        let sizes = PartitionSizes::from_assignments(&rgs);
        let dp = eppf_dp(&sizes, alpha)?;
        let p = eppf_py(&sizes, &py, EppfVariant::Corrected);
        total.0 += dp;
        total.1 += p;
        println!("  {rgs:?}  dp {dp:.4}  py {p:.4}");
    }
    println!("  sums: {:.12} {:.12}", total.0, total.1);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    println!("\none CRP draw of 20 items: {:?}", sample_crp(20, &py, &mut rng));

    let w = stick_break_py(&py, 10, &mut rng)?;
    let shown: Vec<String> = w.weights().iter().map(|v| format!("{v:.3}")).collect();
    println!("first stick-breaking weights: [{}], residual {:.3}", shown.join(", "), w.residual());

    // DP clusters grow like alpha ln m, PY clusters like m^d.
    println!("\n{:>8} {:>8} {:>8}", "m", "DP K_m", "PY K_m");
    let m = 100_000;
    let dp = sample_block_counts(m, &PyParams::dirichlet(alpha)?, &mut rng);
    let pk = sample_block_counts(m, &py, &mut rng);
    for e in 1..=5 {
        let i = 10usize.pow(e);
        println!("{i:>8} {:>8} {:>8}", dp[i - 1], pk[i - 1]);
    }
    Ok(())
}
