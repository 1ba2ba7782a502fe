//! Row-major serialization of potential-field snapshots, for golden
//! comparisons and offline inspection.

use warpgrid_core::PotentialField;

/// One row of cells per line, values comma-separated with full precision
/// hex bits so snapshots compare exactly.
pub fn phi_bits_csv(field: &PotentialField) -> String {
    let w = field.spec().width_cells();
    let values = field.phi_row_major();
    let mut out = String::new();
    for (i, v) in values.iter().enumerate() {
        out.push_str(&format!("{:016x}", v.to_bits()));
        if (i + 1) % w == 0 {
            out.push('\n');
        } else {
            out.push(',');
        }
    }
    out
}

/// Human-readable row-major dump with fixed precision.
pub fn phi_csv(field: &PotentialField) -> String {
    let w = field.spec().width_cells();
    let values = field.phi_row_major();
    let mut out = String::new();
    for (i, v) in values.iter().enumerate() {
        out.push_str(&format!("{v:.12}"));
        if (i + 1) % w == 0 {
            out.push('\n');
        } else {
            out.push(',');
        }
    }
    out
}
