use std::path::Path;

use gnrk::dataset::{
    generate_burgers, generate_coupled, load_dataset, BurgersConfig, BurgersVariant, CoupledConfig, DatasetManifest,
    Split,
};
use gnrk::domain::{Domain, Topology};
use gnrk::solver::{butcher, integrate};
use gnrk::systems::{BurgersIc, Coefficients, IcRecord, SystemKind, DEFAULT_NU};

fn small_coupled(system: SystemKind, n_train: usize, n_test: usize, seed: u64) -> CoupledConfig {
    let mut c = CoupledConfig::new(system, n_train, n_test, seed).unwrap();
    c.node_range = (12, 20);
    c.total_time /= 10.0;
    c.steps /= 10;
    c
}

fn small_burgers(variant: BurgersVariant, seed: u64) -> BurgersConfig {
    let mut c = BurgersConfig::new(variant, 3, 2, seed);
    c.grid_size = 32;
    c.grid_size_range = (30, 40);
    c.steps = 100;
    c
}

fn dir_bytes(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn heat_sample_has_expected_pairs_and_time_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = CoupledConfig::new(SystemKind::Heat, 2, 1, 3).unwrap();
    let manifest = generate_coupled(&cfg, dir.path()).unwrap();
    assert_eq!(manifest.samples.len(), 3);
    let ds = load_dataset(dir.path()).unwrap();
    for s in &ds.samples {
        assert_eq!(s.trajectory.num_steps(), 100);
        assert!((s.trajectory.time_grid.total() - 2.0).abs() < 1e-12);
        let uniform = 2.0 / 100.0;
        assert!(s
            .trajectory
            .time_grid
            .dts()
            .iter()
            .all(|dt| (dt / uniform - 1.0).abs() <= 0.1 + 1e-12));
        assert!((50..=150).contains(&s.entry.num_nodes));
        assert!(s.instance.graph.is_connected());
    }
    assert_eq!(ds.pair_ids(Split::Train).len(), 200);
    assert_eq!(ds.pairs(Split::Test).count(), 100);
    let first = ds.pairs(Split::Train).next().unwrap();
    assert_eq!(first.dt, ds.samples[0].trajectory.time_grid.dts()[0]);
    assert_eq!(first.target, ds.samples[0].trajectory.state(1));
}

#[test]
fn orders_follow_split() {
    let dir = tempfile::tempdir().unwrap();
    let m = generate_coupled(&small_coupled(SystemKind::Rossler, 2, 2, 1), dir.path()).unwrap();
    for s in &m.samples {
        assert_eq!(s.order, if s.split == Split::Train { 1 } else { 4 });
    }
    let dir = tempfile::tempdir().unwrap();
    let m = generate_burgers(&small_burgers(BurgersVariant::IV, 2), dir.path()).unwrap();
    for s in &m.samples {
        assert_eq!(s.order, if s.split == Split::Train { 1 } else { 4 });
    }
    let dir = tempfile::tempdir().unwrap();
    let m = generate_burgers(&small_burgers(BurgersVariant::I, 2), dir.path()).unwrap();
    assert!(m.samples.iter().all(|s| s.order == 4));
}

#[test]
fn trajectories_match_reintegration_bit_exactly() {
    for system in [SystemKind::Heat, SystemKind::Kuramoto, SystemKind::Rossler] {
        let dir = tempfile::tempdir().unwrap();
        generate_coupled(&small_coupled(system, 1, 1, 9), dir.path()).unwrap();
        let ds = load_dataset(&dir.path().join("manifest.json")).unwrap();
        for s in &ds.samples {
            let rhs = s.instance.rhs().unwrap();
            let again = integrate(
                &*rhs,
                s.trajectory.state(0),
                &s.trajectory.time_grid,
                &butcher(s.entry.order).unwrap(),
            )
            .unwrap();
            assert_eq!(again.states, s.trajectory.states, "{system}");
        }
    }
}

#[test]
fn generation_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    generate_coupled(&small_coupled(SystemKind::Kuramoto, 2, 2, 5), a.path()).unwrap();
    generate_coupled(&small_coupled(SystemKind::Kuramoto, 2, 2, 5), b.path()).unwrap();
    generate_coupled(&small_coupled(SystemKind::Kuramoto, 2, 2, 6), c.path()).unwrap();
    assert_eq!(dir_bytes(a.path()), dir_bytes(b.path()));
    assert_ne!(dir_bytes(a.path()), dir_bytes(c.path()));

    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    generate_burgers(&small_burgers(BurgersVariant::III, 4), a.path()).unwrap();
    generate_burgers(&small_burgers(BurgersVariant::III, 4), b.path()).unwrap();
    assert_eq!(dir_bytes(a.path()), dir_bytes(b.path()));
}

#[test]
fn train_and_test_streams_are_disjoint_and_stable() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let small = generate_coupled(&small_coupled(SystemKind::Heat, 3, 1, 8), a.path()).unwrap();
    let large = generate_coupled(&small_coupled(SystemKind::Heat, 3, 4, 8), b.path()).unwrap();
    let train_seeds = |m: &DatasetManifest| -> Vec<u64> {
        m.samples
            .iter()
            .filter(|s| s.split == Split::Train)
            .map(|s| s.seed)
            .collect()
    };
    assert_eq!(train_seeds(&small), train_seeds(&large));
    let mut all: Vec<u64> = large.samples.iter().map(|s| s.seed).collect();
    all.sort();
    all.dedup();
    assert_eq!(all.len(), 7);
    assert_eq!(small.samples[3].trajectory_sha256, large.samples[3].trajectory_sha256);
}

#[test]
fn burgers_variants_randomize_only_their_axis() {
    // The amplitude is fixed by the grid, so only the shape parameters identify the default.
    let is_default = |ic: &IcRecord| {
        let d = BurgersIc::default_params();
        let same = |p: &BurgersIc| (p.phi_x, p.phi_y, p.x0, p.y0) == (d.phi_x, d.phi_y, d.x0, d.y0);
        matches!(ic, IcRecord::Burgers { u, v } if same(u) && same(v))
    };
    for variant in [
        BurgersVariant::I,
        BurgersVariant::II,
        BurgersVariant::III,
        BurgersVariant::IV,
    ] {
        let dir = tempfile::tempdir().unwrap();
        generate_burgers(&small_burgers(variant, 1), dir.path()).unwrap();
        let ds = load_dataset(dir.path()).unwrap();
        assert_eq!(ds.manifest.variant, variant.to_string());
        let mut ics = Vec::new();
        let mut nus = Vec::new();
        for s in &ds.samples {
            let Domain::Grid(grid) = &s.instance.domain else {
                panic!("grid expected")
            };
            let Coefficients::Burgers(c) = &s.entry.coefficients else {
                panic!("burgers expected")
            };
            let uniform_grid = grid.nx == 32
                && grid.ny == 32
                && grid
                    .x_spacings()
                    .iter()
                    .chain(&grid.y_spacings())
                    .all(|h| (h - 1.0 / 32.0).abs() < 1e-12);
            let dts = s.trajectory.time_grid.dts();
            let uniform_dt = dts.iter().all(|dt| *dt == 1.0 / 100.0);
            assert_eq!(uniform_grid, variant != BurgersVariant::III, "{variant} grid");
            assert_eq!(uniform_dt, variant != BurgersVariant::IV, "{variant} dt");
            assert_eq!(is_default(&s.entry.ic), variant != BurgersVariant::I, "{variant} ic");
            assert_eq!(c.nu == DEFAULT_NU, variant != BurgersVariant::II, "{variant} nu");
            if variant == BurgersVariant::III {
                assert!((30..=40).contains(&grid.nx) && (30..=40).contains(&grid.ny));
                for h in grid.x_spacings().iter().map(|h| h * grid.nx as f64) {
                    assert!((h - 1.0).abs() <= 0.1 / 0.9 + 1e-9, "spacing ratio {h}");
                }
            }
            if variant == BurgersVariant::IV {
                assert!((s.trajectory.time_grid.total() - 1.0).abs() < 1e-12);
                assert!(dts.iter().all(|dt| (dt * 100.0 - 1.0).abs() <= 0.1 + 1e-12));
            }
            assert!(s.trajectory.states.iter().all(|v| v.is_finite()));
            ics.push(s.entry.ic.clone());
            nus.push(c.nu);
        }
        if variant == BurgersVariant::I {
            assert_ne!(ics[0], ics[1]);
        }
        if variant == BurgersVariant::II {
            assert_ne!(nus[0], nus[1]);
        }
    }
}

#[test]
fn topology_list_restricts_sampling() {
    for topology in Topology::ALL {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_coupled(SystemKind::Heat, 3, 0, 2);
        cfg.topologies = vec![topology];
        let m = generate_coupled(&cfg, dir.path()).unwrap();
        assert!(m.samples.iter().all(|s| s.topology == Some(topology)));
    }
}

#[test]
fn corrupt_files_are_named_in_errors() {
    let dir = tempfile::tempdir().unwrap();
    generate_coupled(&small_coupled(SystemKind::Heat, 1, 1, 4), dir.path()).unwrap();
    let traj = dir.path().join("samples/1/traj.bin");
    let original = std::fs::read(&traj).unwrap();

    std::fs::write(&traj, &original[..original.len() - 8]).unwrap();
    let err = load_dataset(dir.path()).unwrap_err();
    assert!(matches!(err, gnrk::Error::Corrupt { .. }));
    assert!(err.to_string().contains("samples/1/traj.bin"), "{err}");

    let mut flipped = original.clone();
    flipped[17] ^= 0x40;
    std::fs::write(&traj, &flipped).unwrap();
    let err = load_dataset(dir.path()).unwrap_err();
    assert!(err.to_string().contains("traj.bin"), "{err}");

    std::fs::write(&traj, &original).unwrap();
    std::fs::remove_file(dir.path().join("samples/0/dts.bin")).unwrap();
    let err = load_dataset(dir.path()).unwrap_err();
    assert!(err.to_string().contains("dts.bin"), "{err}");
}

#[test]
fn manifest_counts_match_request() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_burgers(BurgersVariant::II, 3);
    cfg.n_train = 4;
    cfg.n_test = 6;
    let m = generate_burgers(&cfg, dir.path()).unwrap();
    assert_eq!((m.count(Split::Train), m.count(Split::Test)), (4, 6));
    let on_disk: DatasetManifest =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(on_disk, m);
}
