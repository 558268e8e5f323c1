//! Generate a synthetic measurements table, corrupt a few cells, and run the
//! cleaning pipeline over it.

use cardioforest::dataio::{generate_synthetic, prepare, Cell, PrepConfig, SynthConfig};

fn main() -> cardioforest::Result<()> {
    let ds = generate_synthetic(&SynthConfig::calibrated(500, 0.1546, 42))?;
    println!("generated {} rows, prevalence {:.4}", ds.n_rows(), ds.positive_rate());

    let mut table = ds.to_table();
    // a duplicated record, an implausible QRS duration and a missing RR interval
    let mut rows: Vec<usize> = (0..table.n_rows()).collect();
    rows.push(0);
    table = table.select_rows(&rows);
    if let Some(c) = table.column_mut("qrs_duration") {
        c.cells[1] = Cell::Number(-40.0);
    }
    if let Some(c) = table.column_mut("rr_interval") {
        c.cells[2] = Cell::Missing;
    }

    let (clean, report) = prepare(&table, &PrepConfig::default())?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    println!("{} rows after cleaning", clean.n_rows());
    Ok(())
}
