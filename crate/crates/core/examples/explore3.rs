use probsched::exact::ExactEngine;
use probsched::fixtures::fixture;
use probsched::semantics::{Config, RoundRobin};

fn main() {
    let name = std::env::args().nth(1).unwrap();
    let f = fixture(&name).unwrap();
    let cfg = Config::initial(f.program());
    for h in [200u64, 400, 600, 800, 1000, 1400] {
        let mut eng = ExactEngine::new();
        let (dist, residual) = eng.value_dist(&RoundRobin, &cfg, h).unwrap();
        println!(
            "H={h}: mass={} residual={} dist={}",
            dist.mass(),
            residual,
            if dist.support_len() <= 4 {
                dist.canonical_text()
            } else {
                format!("<{} outcomes>", dist.support_len())
            }
        );
        if residual == probsched::dist::rat(0, 1) {
            break;
        }
    }
}
