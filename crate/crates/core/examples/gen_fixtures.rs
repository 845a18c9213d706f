fn main() {
    std::fs::write(
        "fixtures/bloom.cpl",
        probsched::fixtures::bloom_source(2, 1, &[0, 1], 2),
    )
    .unwrap();
    std::fs::write(
        "fixtures/bloom-mc.cpl",
        probsched::fixtures::bloom_source(8, 2, &[0, 1], 2),
    )
    .unwrap();
}
