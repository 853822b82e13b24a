use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::C64;

use super::{bistatic_rcs, Direction, FarFieldCut};

pub const FAR_FIELD_HEADER: [&str; 8] = [
    "theta_deg",
    "phi_deg",
    "e_theta_re",
    "e_theta_im",
    "e_phi_re",
    "e_phi_im",
    "rcs_theta_dbsm",
    "rcs_phi_dbsm",
];

/// Linear quantities in scientific notation with 9 significant digits.
pub fn fmt_sci(x: f64) -> String {
    format!("{x:.8e}")
}

/// dB quantities with 4 decimals.
pub fn fmt_db(x: f64) -> String {
    format!("{x:.4}")
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`,
/// so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Far-field cut as CSV text; RCS columns use incident amplitude `e0`.
pub fn far_field_csv(cut: &FarFieldCut, e0: f64) -> Result<String> {
    let rcs = bistatic_rcs(cut, e0)?;
    let (st, sp) = (rcs.theta_dbsm(), rcs.phi_dbsm());
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
    w.write_record(FAR_FIELD_HEADER).map_err(csv_err)?;
    for k in 0..cut.len() {
        let d = cut.directions[k];
        w.write_record([
            d.theta_deg.to_string(),
            d.phi_deg.to_string(),
            fmt_sci(cut.e_theta[k].re),
            fmt_sci(cut.e_theta[k].im),
            fmt_sci(cut.e_phi[k].re),
            fmt_sci(cut.e_phi[k].im),
            fmt_db(st[k]),
            fmt_db(sp[k]),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is ASCII"))
}

pub fn write_far_field_csv(path: &Path, cut: &FarFieldCut, e0: f64) -> Result<()> {
    write_atomic(path, far_field_csv(cut, e0)?.as_bytes())
}

/// Parses the first six columns of a far-field CSV; RCS columns are ignored.
pub fn parse_far_field_csv(text: &str) -> Result<FarFieldCut> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let bad = |line: usize, message: String| Error::Config(format!("far-field csv line {line}: {message}"));
    let header = r.headers().map_err(|e| bad(1, e.to_string()))?.clone();
    if header.len() < 6 || header.iter().take(6).ne(FAR_FIELD_HEADER.iter().take(6).copied()) {
        return Err(bad(1, format!("expected header starting {:?}", &FAR_FIELD_HEADER[..6])));
    }
    let mut cut = FarFieldCut {
        directions: Vec::new(),
        e_theta: Vec::new(),
        e_phi: Vec::new(),
    };
    for (row, record) in r.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| bad(line, e.to_string()))?;
        let mut v = [0.0; 6];
        for (k, slot) in v.iter_mut().enumerate() {
            let field = record.get(k).ok_or_else(|| bad(line, "missing column".into()))?;
            *slot = field.trim().parse().map_err(|_| bad(line, format!("not a number: {field:?}")))?;
        }
        cut.directions.push(Direction::new(v[0], v[1]));
        cut.e_theta.push(C64::new(v[2], v[3]));
        cut.e_phi.push(C64::new(v[4], v[5]));
    }
    Ok(cut)
}

pub fn read_far_field_csv(path: &Path) -> Result<FarFieldCut> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_far_field_csv(&text)
}
