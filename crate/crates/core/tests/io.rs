mod common;

use std::path::PathBuf;

use common::*;
use sweepnet::generators::*;
use sweepnet::io::*;
use sweepnet::lattice::*;
use sweepnet::linalg::DEFAULT_RANK_TOL;
use sweepnet::sweep::Space;
use sweepnet::trajectory::SolverKind;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

#[test]
fn periodic_fixture_loads_and_assembles() {
    let (def, loads) = load_network(&fixture("periodic8.json")).unwrap();
    assert_eq!((def.n_nodes(), def.n_springs(), def.n_constraints()), (8, 24, 2));
    let sys = assemble(&def, DEFAULT_RANK_TOL).unwrap();
    assert_eq!(sys.dim_v, 10);
    assert!(sys.reference_lengths.iter().all(|l| (l - 1.0).abs() < 1e-12));
    // perfect lattice: affine response with the analytic modulus
    let (sys, traj) = solve_with(&def, &loads, None, SolverKind::Leapfrog, Space::Reduced, 1e-4);
    let vol = sweepnet::analysis::reference_volume(&def);
    let t = 5e-4;
    let st = sweepnet::analysis::total_stress(&sys, &traj.state_at(t).sigma, vol).unwrap();
    assert!((st[(0, 0)] / t - 9.0 / (4.0 * 3f64.sqrt())).abs() < 1e-9);
}

#[test]
fn periodic_fixture_matches_the_generator() {
    let (file_def, _) = load_network(&fixture("periodic8.json")).unwrap();
    let spec = PeriodicSpec { nx: 4, ny: 2, jitter: 0.0, ..PeriodicSpec::default() };
    let (gen_def, _) = build_periodic_tri_grid(&spec).unwrap();
    assert_eq!(file_def.springs, gen_def.springs);
    assert_eq!(file_def.periodic_box, gen_def.periodic_box);
}

#[test]
fn save_load_round_trip_on_every_builder() {
    let dir = tempfile::tempdir().unwrap();
    let cases = vec![
        build_example1().unwrap(),
        build_tri_grid_with_hole(&GridSpec::standard()).unwrap(),
        build_periodic_tri_grid(&PeriodicSpec::default()).unwrap(),
    ];
    for (k, (def, loads)) in cases.into_iter().enumerate() {
        let path = dir.path().join(format!("net{k}.json"));
        save_network(&path, &def, &loads).unwrap();
        let (d2, l2) = load_network(&path).unwrap();
        assert!(d2 == def, "definition {k} changed");
        assert!(l2 == loads, "loads {k} changed");
    }
}

#[test]
fn schema_errors_name_the_culprit() {
    let text = std::fs::read_to_string(fixture("periodic8.json")).unwrap();
    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    doc["springs"][4]["terminus"] = serde_json::json!(99);
    let err = parse_network(&doc.to_string()).unwrap_err().to_string();
    assert!(err.contains("spring 5") && err.contains("99"), "{err}");

    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    doc["springs"][0]["lower"] = serde_json::json!(0.5);
    let err = parse_network(&doc.to_string()).unwrap_err().to_string();
    assert!(err.contains("spring 1"), "{err}");

    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    doc["springs"][1]["id"] = serde_json::json!(1);
    let err = parse_network(&doc.to_string()).unwrap_err().to_string();
    assert!(err.contains("duplicate"), "{err}");

    let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    doc["springs"][2]["colour"] = serde_json::json!("red");
    assert!(parse_network(&doc.to_string()).is_err());
}

#[test]
fn trajectory_csv_round_trip_and_determinism() {
    let (def, loads) = build_example1().unwrap();
    let (sys, traj) = solve_with(&def, &loads, None, SolverKind::Leapfrog, Space::Reduced, 1e-4);
    let (_, again) = solve_with(&def, &loads, None, SolverKind::Leapfrog, Space::Reduced, 1e-4);
    let csv = trajectory_csv(&traj);
    assert_eq!(csv, trajectory_csv(&again));
    let header = csv.lines().next().unwrap();
    assert_eq!(header, "time,y_1,y_2,sigma_1,sigma_2,sigma_3,sigma_4,sigma_5,sigma_6,sigma_7,sigma_8,sigma_9,sigma_10");
    let back = parse_trajectory(&csv, &sys.stiffness, SolverKind::Leapfrog, Space::Reduced).unwrap();
    assert_eq!(back.states.len(), traj.states.len());
    for (a, b) in back.states.iter().zip(&traj.states) {
        assert_eq!(a.time, b.time);
        assert_eq!(a.y, b.y);
        assert_eq!(a.sigma, b.sigma);
    }
    assert!(parse_trajectory("time,y_1\n0,abc\n", &V::zeros(0), SolverKind::Leapfrog, Space::Reduced).is_err());
}
