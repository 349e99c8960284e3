use opda::oracle::Decider;
use opda::zoo::{crosscheck, entries};

#[test]
fn every_entry_agrees_at_its_test_length() {
    let dec = Decider::default();
    for e in entries() {
        let t = std::time::Instant::now();
        let rep = crosscheck(e.name, e.test_max_len, &dec).unwrap();
        eprintln!("{} up to {}: {}/{} in {:?}", e.name, e.test_max_len, rep.agreed, rep.checked, t.elapsed());
        assert!(rep.ok(), "{}: {:?}", e.name, rep);
    }
}
