use std::path::Path;

use rotators_harness::config::{ExperimentConfig, ModelKind};
use rotators_harness::error::HarnessError;
use rotators_harness::oracle_run::{run_oracle, OracleReport};
use rotators_harness::output::{read_json, read_states, write_states, FileEntry};
use rotators_harness::presets::{names, preset, Preset};
use rotators_harness::run::{run_in, Manifest};
use rotators_harness::sweep::{estimate_dcr, read_summary, sweep, write_summary, DcrEstimate, SummaryRow, SweepGrid};

const MINIMAL_XY: &str = r#"
[lattice]
dims = [4, 4, 4]

[model]
kind = "xy"

[dynamics]
beta = 2.0
drift = 0.5
dt = 0.01
t_end = 1.0
sample_every = 0.01
"#;

const MINIMAL_CLOCK: &str = r#"
[lattice]
dims = [4, 4, 4]

[model]
kind = "clock"
n = 6

[dynamics]
beta = 1.0
drift = 0.5
t_end = 2.0
sample_every = 0.5

[rng]
seed = 9
"#;

fn csv_rows(path: &Path) -> usize {
    csv::Reader::from_path(path).unwrap().records().count()
}

#[test]
fn config_round_trips_through_toml() {
    for text in [MINIMAL_XY, MINIMAL_CLOCK] {
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        let again = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(cfg, again);
    }
    for name in names() {
        match preset(&name).unwrap() {
            Preset::Run(c) => assert_eq!(ExperimentConfig::from_toml_str(&c.to_toml_string()).unwrap(), c),
            Preset::Sweep(g) => assert_eq!(SweepGrid::from_toml_str(&g.to_toml_string()).unwrap(), g),
        }
    }
}

#[test]
fn unknown_keys_are_rejected() {
    let text = MINIMAL_XY.replace("beta = 2.0", "beta = 2.0\nbetta = 1.0");
    let err = ExperimentConfig::from_toml_str(&text).unwrap_err();
    assert_eq!(err.kind(), "config");
    assert!(err.to_string().contains("betta"), "{err}");
}

#[test]
fn negative_beta_names_the_key() {
    let text = MINIMAL_XY.replace("beta = 2.0", "beta = -1.0");
    let err = ExperimentConfig::from_toml_str(&text).unwrap_err();
    assert_eq!(err.key(), Some("dynamics.beta"));
    assert_eq!(err.exit_code(), 2);
    let json = err.to_json();
    assert_eq!(json["error"]["key"], "dynamics.beta");
    assert_eq!(json["error"]["kind"], "config");
}

#[test]
fn misaligned_sampling_is_rejected() {
    let text = MINIMAL_XY.replace("sample_every = 0.01", "sample_every = 0.015");
    let err = ExperimentConfig::from_toml_str(&text).unwrap_err();
    assert_eq!(err.key(), Some("dynamics.sample_every"));
}

#[test]
fn minimal_xy_run_writes_expected_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_toml_str(MINIMAL_XY).unwrap();
    let out = run_in(&cfg, tmp.path()).unwrap();
    // 100 steps, one sample after each
    assert_eq!(csv_rows(&tmp.path().join("series.csv")), 100);
    assert_eq!(out.trajectory.samples.len(), 100);
    assert!((out.trajectory.samples[0].t - 0.01).abs() < 1e-15);
    let header = csv::Reader::from_path(tmp.path().join("series.csv")).unwrap().headers().unwrap().clone();
    assert_eq!(header.iter().collect::<Vec<_>>(), rotators_harness::output::SERIES_HEADER);

    let manifest = Manifest::load(tmp.path()).unwrap();
    assert_eq!(manifest.config, cfg);
    assert_eq!(manifest.derived.sites, 64);
    assert_eq!(manifest.derived.bonds, 192);
    assert!((manifest.derived.noise_amplitude.unwrap() - 1.0).abs() < 1e-15);
    for f in &manifest.files {
        assert_eq!(*f, FileEntry::new(tmp.path(), &f.name, &f.kind, f.rows).unwrap());
    }
    let names: Vec<&str> = manifest.files.iter().map(|f| f.name.as_str()).collect();
    assert_eq!(names, ["series.csv", "analysis.json"]);
}

#[test]
fn runs_are_byte_deterministic() {
    for text in [MINIMAL_XY, MINIMAL_CLOCK] {
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        run_in(&cfg, a.path()).unwrap();
        run_in(&cfg, b.path()).unwrap();
        for f in ["series.csv", "analysis.json"] {
            let x = std::fs::read(a.path().join(f)).unwrap();
            let y = std::fs::read(b.path().join(f)).unwrap();
            assert_eq!(x, y, "{f} differs between identical runs");
        }
        let mut other = cfg.clone();
        other.rng.seed += 1;
        let c = tempfile::tempdir().unwrap();
        run_in(&other, c.path()).unwrap();
        assert_ne!(
            std::fs::read(a.path().join("series.csv")).unwrap(),
            std::fs::read(c.path().join("series.csv")).unwrap()
        );
    }
}

#[test]
fn states_file_round_trips() {
    for (text, kind) in [(MINIMAL_CLOCK, ModelKind::Clock), (MINIMAL_XY, ModelKind::Xy)] {
        let mut cfg = ExperimentConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.model.kind, kind);
        cfg.dynamics.record_full_states = true;
        let tmp = tempfile::tempdir().unwrap();
        let out = run_in(&cfg, tmp.path()).unwrap();
        let snaps = out.trajectory.snapshots.as_ref().unwrap();
        let (header, back) = read_states(&tmp.path().join("states.bin")).unwrap();
        assert_eq!(header.dims, [4, 4, 4]);
        assert_eq!(header.n, if kind == ModelKind::Clock { 6 } else { 0 });
        assert_eq!(header.count as usize, snaps.times.len());
        assert_eq!(&back, snaps);

        let copy = tmp.path().join("copy.bin");
        write_states(&copy, [4, 4, 4], &back).unwrap();
        assert_eq!(std::fs::read(&copy).unwrap(), std::fs::read(tmp.path().join("states.bin")).unwrap());
    }
}

#[test]
fn truncated_states_file_is_rejected() {
    let mut cfg = ExperimentConfig::from_toml_str(MINIMAL_CLOCK).unwrap();
    cfg.dynamics.record_full_states = true;
    let tmp = tempfile::tempdir().unwrap();
    run_in(&cfg, tmp.path()).unwrap();
    let path = tmp.path().join("states.bin");
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 1]).unwrap();
    assert!(read_states(&path).is_err());
    std::fs::write(&path, b"not a state file at all, just some text").unwrap();
    assert!(read_states(&path).is_err());
}

fn small_grid(axes: &str) -> SweepGrid {
    let base = MINIMAL_CLOCK.replace("[lattice]", "[base.lattice]")
        .replace("[model]", "[base.model]")
        .replace("[dynamics]", "[base.dynamics]")
        .replace("[rng]", "[base.rng]");
    SweepGrid::from_toml_str(&format!("[sweep]\n{axes}\n{base}")).unwrap()
}

#[test]
fn sweep_writes_one_row_per_cell() {
    let grid = small_grid("beta = [0.5, 1.0]\ndrift = [0.0, 1.0]");
    let tmp = tempfile::tempdir().unwrap();
    let rows = sweep(&grid, tmp.path()).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.status == "ok"));
    let back = read_summary(&tmp.path().join("summary.csv")).unwrap();
    assert_eq!(back, rows);
    for r in &rows {
        assert!(tmp.path().join(&r.cell).join("series.csv").exists());
    }
}

#[test]
fn replicas_get_distinct_seeds_and_outputs() {
    let grid = small_grid("replicas = 2");
    let tmp = tempfile::tempdir().unwrap();
    let rows = sweep(&grid, tmp.path()).unwrap();
    assert_eq!(rows.len(), 2);
    assert_ne!(rows[0].seed, rows[1].seed);
    let a = std::fs::read(tmp.path().join(&rows[0].cell).join("series.csv")).unwrap();
    let b = std::fs::read(tmp.path().join(&rows[1].cell).join("series.csv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn empty_grid_gives_header_only_summary() {
    let grid = small_grid("drift = []");
    let tmp = tempfile::tempdir().unwrap();
    let rows = sweep(&grid, tmp.path()).unwrap();
    assert!(rows.is_empty());
    let text = std::fs::read_to_string(tmp.path().join("summary.csv")).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("cell,beta,n,drift"));
}

#[test]
fn removing_a_cell_leaves_others_unchanged() {
    let full = small_grid("drift = [0.0, 0.5, 1.0]");
    let part = small_grid("drift = [0.0, 1.0]");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let rows_a = sweep(&full, a.path()).unwrap();
    let rows_b = sweep(&part, b.path()).unwrap();
    for rb in &rows_b {
        let ra = rows_a.iter().find(|r| r.cell == rb.cell).unwrap();
        assert_eq!(ra, rb);
        let sa = std::fs::read(a.path().join(&ra.cell).join("series.csv")).unwrap();
        let sb = std::fs::read(b.path().join(&rb.cell).join("series.csv")).unwrap();
        assert_eq!(sa, sb);
    }
}

#[test]
fn bad_cell_is_reported_not_fatal() {
    let grid = small_grid("beta = [-1.0, 1.0]");
    let tmp = tempfile::tempdir().unwrap();
    let rows = sweep(&grid, tmp.path()).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].status.starts_with("error"), "{}", rows[0].status);
    assert_eq!(rows[1].status, "ok");
}

fn scan_row(drift: f64, rotating: Option<bool>, replica: u32) -> SummaryRow {
    SummaryRow {
        cell: format!("d{drift}_r{replica}"),
        beta: 2.0,
        n: 6,
        drift,
        l: 8,
        init_k: 0,
        replica,
        seed: 0,
        abs_m_mean: Some(0.9),
        omega: Some(0.0),
        omega_stderr: Some(0.0),
        rotating,
        energy_per_site: Some(-2.0),
        status: "ok".into(),
    }
}

#[test]
fn critical_drift_bracket() {
    let rows: Vec<SummaryRow> = [(0.1, false), (0.2, false), (0.3, true), (0.4, true)]
        .iter()
        .map(|&(d, v)| scan_row(d, Some(v), 0))
        .collect();
    assert_eq!(
        estimate_dcr(&rows, 2.0, 6).unwrap(),
        DcrEstimate::Bracket { lower: 0.2, upper: 0.3 }
    );

    let all: Vec<SummaryRow> = [0.1, 0.2].iter().map(|&d| scan_row(d, Some(true), 0)).collect();
    assert_eq!(estimate_dcr(&all, 2.0, 6).unwrap(), DcrEstimate::Bracket { lower: 0.0, upper: 0.1 });

    let none: Vec<SummaryRow> = [0.1, 0.2].iter().map(|&d| scan_row(d, Some(false), 0)).collect();
    assert_eq!(estimate_dcr(&none, 2.0, 6).unwrap(), DcrEstimate::AboveScan { d_max: 0.2 });

    let zigzag: Vec<SummaryRow> = [(0.1, false), (0.2, true), (0.3, false), (0.4, true)]
        .iter()
        .map(|&(d, v)| scan_row(d, Some(v), 0))
        .collect();
    match estimate_dcr(&zigzag, 2.0, 6).unwrap() {
        DcrEstimate::Undetermined { offending } => assert_eq!(offending, ["d0.2_r0", "d0.3_r0"]),
        other => panic!("{other:?}"),
    }

    let split = vec![scan_row(0.1, Some(false), 0), scan_row(0.2, Some(true), 0), scan_row(0.2, Some(false), 1)];
    match estimate_dcr(&split, 2.0, 6).unwrap() {
        DcrEstimate::Undetermined { offending } => assert_eq!(offending, ["d0.2_r0", "d0.2_r1"]),
        other => panic!("{other:?}"),
    }
    assert!(estimate_dcr(&rows, 3.0, 6).is_err());
}

#[test]
fn summary_survives_a_write_read_cycle() {
    let rows = vec![scan_row(0.5, Some(true), 0), scan_row(1.0, None, 1)];
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("summary.csv");
    write_summary(&path, &rows).unwrap();
    assert_eq!(read_summary(&path).unwrap(), rows);
}

#[test]
fn presets_resolve_and_unknown_names_list_the_rest() {
    assert_eq!(names().len(), 6);
    for name in names() {
        let p = preset(&name).unwrap();
        let base = match &p {
            Preset::Run(c) => c.clone(),
            Preset::Sweep(g) => g.base.clone(),
        };
        base.validate().unwrap();
        assert_eq!(base.output.directory, format!("out/{name}"));
    }
    match preset("nope").unwrap_err() {
        HarnessError::UnknownPreset { name, available } => {
            assert_eq!(name, "nope");
            assert_eq!(available, names());
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn oracle_command_reports_gibbs_agreement() {
    let text = r#"
[lattice]
dims = [2, 2, 1]

[model]
kind = "clock"
n = 3

[dynamics]
beta = 0.7
t_end = 1.0
sample_every = 0.5

[oracle]
dump_generator = true
"#;
    let cfg = ExperimentConfig::from_toml_str(text).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let rep = run_oracle(&cfg, tmp.path()).unwrap();
    assert_eq!(rep.dimension, 81);
    assert_eq!(rep.null_space_dim, 1);
    assert!(rep.tv_to_gibbs < 1e-10, "{}", rep.tv_to_gibbs);
    assert!(rep.rotation_deviation < 1e-10);
    assert_eq!(csv_rows(&tmp.path().join("pi.csv")), 81);
    // each state has 4 sites × 2 directions of off-diagonal moves
    assert_eq!(csv_rows(&tmp.path().join("generator.csv")), 81 * 8);
    let back: OracleReport = read_json(&tmp.path().join("oracle.json")).unwrap();
    assert_eq!(back, rep);
    let pi_sum: f64 = csv::Reader::from_path(tmp.path().join("pi.csv"))
        .unwrap()
        .records()
        .map(|r| r.unwrap()[2].parse::<f64>().unwrap())
        .sum();
    assert!((pi_sum - 1.0).abs() < 1e-12);

    let mut xy = cfg.clone();
    xy.model.kind = ModelKind::Xy;
    xy.dynamics.dt = 0.5;
    assert_eq!(run_oracle(&xy, tmp.path()).unwrap_err().key(), Some("model.kind"));
}
