use probsched::exact::ExactEngine;
use probsched::fixtures::fixture;
use probsched::semantics::{Config, RoundRobin};
use probsched::syntax::erase;

fn main() {
    for name in ["tape-pair", "tape-fork", "counter-I1", "counter-I2", "twoincr-I1", "twoincr-I2", "conTwoAdd-I1", "conTwoAdd-I2", "lazyrand", "lazyrace"] {
        let f = fixture(name).unwrap();
        let prog = f.program();
        let erased = erase(&prog);
        // erased programs take more steps; give them rope
        let h = f.horizon * 2 + 40;
        let mut eng = ExactEngine::new();
        let (d1, r1) = eng.value_dist(&RoundRobin, &Config::initial(prog), h).unwrap();
        let (d2, r2) = eng.value_dist(&RoundRobin, &Config::initial(erased), h).unwrap();
        println!(
            "{name}: equal={} r1={} r2={}",
            d1 == d2, r1, r2
        );
    }
}
