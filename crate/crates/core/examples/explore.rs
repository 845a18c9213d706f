use probsched::exact::ExactEngine;
use probsched::fixtures::fixture;
use probsched::semantics::{Config, RoundRobin};

fn main() {
    let name = std::env::args().nth(1).unwrap_or_else(|| "twoAdd".into());
    let h: u64 = std::env::args()
        .nth(2)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0);
    let f = fixture(&name).unwrap();
    let horizon = if h == 0 { f.horizon } else { h };
    let cfg = Config::initial(f.program());
    let mut eng = ExactEngine::new();
    let t0 = std::time::Instant::now();
    let (dist, residual) = eng.value_dist(&RoundRobin, &cfg, horizon).unwrap();
    println!(
        "{name} H={horizon}: dist={} residual={} ({:?})",
        dist.canonical_text(),
        residual,
        t0.elapsed()
    );
    let t1 = std::time::Instant::now();
    let sup = eng.sup_violation(&cfg, horizon, &f.predicate).unwrap();
    println!("sup_violation = {} ({:?})", sup, t1.elapsed());
}
