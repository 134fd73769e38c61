use std::collections::HashSet;

use puf_spectra::sim::{collect_responses, generate_population, ChallengeSet, DapufParams, FaultSpec, ResponseTable};
use puf_spectra::stats::uniformity;

fn agreement(a: &ResponseTable, b: &ResponseTable) -> f64 {
    let n = a.instance_count() * a.challenges().len();
    let same = (0..a.instance_count())
        .flat_map(|i| (0..a.challenges().len()).map(move |j| (i, j)))
        .filter(|&(i, j)| a.response(i, j) == b.response(i, j))
        .count();
    same as f64 / n as f64
}

#[test]
fn majority_voting_improves_reliability() {
    let params = DapufParams { noise_sigma: 0.05, ..DapufParams::default() };
    let pop = generate_population(&params, 8).unwrap();
    let cs = ChallengeSet::random(params.n_stages, 1000, 3).unwrap();
    let reference = collect_responses(&pop, &cs, 101).unwrap();
    let r1 = agreement(&collect_responses(&pop, &cs, 1).unwrap(), &reference);
    let r5 = agreement(&collect_responses(&pop, &cs, 5).unwrap(), &reference);
    assert!(r1 < 1.0, "noise has no effect: {r1}");
    assert!(r5 >= r1, "k=5 {r5} < k=1 {r1}");
}

#[test]
fn population_instances_are_distinct() {
    let params = DapufParams::default();
    let pop = generate_population(&params, 50).unwrap();
    let cs = ChallengeSet::random(params.n_stages, 256, 9).unwrap();
    let table = collect_responses(&pop, &cs, 1).unwrap();
    let distinct: HashSet<Vec<u8>> = (0..50)
        .map(|i| table.instance_responses(i).iter().map(|r| r.value()).collect())
        .collect();
    assert_eq!(distinct.len(), 50);
    let ids: HashSet<u64> = pop.iter().map(|i| i.id()).collect();
    assert_eq!(ids.len(), 50);
}

#[test]
fn collection_is_deterministic() {
    let params = DapufParams { n_stages: 32, ..DapufParams::default() };
    let cs = ChallengeSet::random(32, 300, 4).unwrap();
    let a = collect_responses(&generate_population(&params, 5).unwrap(), &cs, 3).unwrap();
    let b = collect_responses(&generate_population(&params, 5).unwrap(), &cs, 3).unwrap();
    assert_eq!(agreement(&a, &b), 1.0);
}

#[test]
fn fault_shifts_uniformity_by_less_than_ten_points() {
    let params = DapufParams::default();
    let pop = generate_population(&params, 20).unwrap();
    let cs = ChallengeSet::random(params.n_stages, 4000, params.seed).unwrap();
    let fault = FaultSpec::reference_fault();
    let faulted: Vec<_> = pop.iter().map(|i| i.inject_fault(&fault).unwrap()).collect();
    let good = collect_responses(&pop, &cs, 5).unwrap();
    let bad = collect_responses(&faulted, &cs, 5).unwrap();
    for bit in 1..=4 {
        let mean = |t: &ResponseTable| {
            let v = t.bit_vectors(bit).unwrap();
            v.iter().map(|x| uniformity(x).unwrap()).sum::<f64>() / v.len() as f64
        };
        let (u_good, u_bad) = (mean(&good), mean(&bad));
        assert!((u_good - u_bad).abs() < 10.0, "bit {bit}: {u_good} vs {u_bad}");
        assert!((40.0..60.0).contains(&u_good), "bit {bit}: {u_good}");
    }
    assert!(agreement(&good, &bad) < 1.0);
}
