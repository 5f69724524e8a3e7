//! Write a field snapshot and an observer series, then read both back.

use nullwave::io::series::{header, read_series, write_series};
use nullwave::io::snapshot::Snapshot;
use nullwave::nonlinearity::SystemSpec;
use nullwave::wave_solver::{observe, GridConfig, InitialData, Simulation};

fn main() {
    let dir = std::env::temp_dir().join("nullwave_snapshot_example");
    std::fs::create_dir_all(&dir).unwrap();
    let data = InitialData::radial_bump(1.0, 1.0, vec![1.0], vec![0.0]);
    let mut sim = Simulation::new(GridConfig::desk(1.0 / 16.0, 2.0, 1.0), &data, SystemSpec::free(1)).unwrap();
    let mut rows = Vec::new();
    sim.run(8, |s, g| {
        let o = observe(s, g, 0.05);
        rows.push(vec![o.t, o.energy, o.max_du]);
    });
    let snap = Snapshot::of_state(&sim.state, &sim.grid);
    let path = dir.join("u.bin");
    snap.save(&path).unwrap();
    let back = Snapshot::load(&path).unwrap();
    println!("{}: shape {:?}, t = {}, identical: {}", path.display(), back.header.shape, back.header.t, back == snap);

    let cols = header(&["t", "energy", "max_du"]);
    let csv = dir.join("observers.csv");
    write_series(&csv, &cols, rows.clone()).unwrap();
    println!("{}: {} rows, identical: {}", csv.display(), rows.len(), read_series(&csv, &cols).unwrap() == rows);
}
