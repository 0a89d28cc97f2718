//! Regeneration of the six reference tables for the two-stratum survey
//! design, with optional row-by-row comparison against the printed values.
//!
//! Each table fixes a cost model, a classical sample size `n_c`, a minimax
//! allocation `(n1, n2)`, and a classical count `xi`, then walks stratum-1
//! counts `xi1` in steps of ten. The remaining columns follow from the rule
//! that the stratified point estimate keeps the classical level of support:
//! `xi2 = round(n2 * (xi/n_c - W1*xi1/n1) / W2)`, clipped to `[0, n2]`.

use serde::Serialize;
use strata_core::estimator::classical_variance_estimate;
use strata_core::population::StratifiedDesign;
use strata_core::Result;

/// Stratum sizes of the population the reference tables describe.
pub const TABLE_N1_POP: u64 = 14_526_524;
pub const TABLE_N2_POP: u64 = 16_182_757;

/// Stratum-1 weight under which the printed rows reproduce exactly.
///
/// The tables were generated with weights rounded to 0.475/0.525 rather
/// than the full-precision population ratios (0.47303/0.52697): under 0.475
/// every readable row matches with the derived `xi2` exact, support within
/// 0.005 percentage points, and variance within 0.04% relative, while the
/// full-precision ratios drift several counts of `xi2` apart. The rest of
/// the library uses full-precision weights throughout.
pub const TABLE_W1: f64 = 0.475;
/// Stratum-2 weight companion to [`TABLE_W1`].
pub const TABLE_W2: f64 = 0.525;

/// One regenerated table row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TableRow {
    /// Positive answers in the stratum-1 sample.
    pub xi1: u64,
    /// Derived positive answers in the stratum-2 sample.
    pub xi2: u64,
    /// Weighted percentage of support, `100*(W1*xi1/n1 + W2*xi2/n2)`.
    pub support_pct: f64,
    /// Plug-in variance of the stratified estimator under the table weights.
    pub variance: f64,
    /// Percent variance reduction relative to the classical estimate.
    pub reduction_pct: f64,
}

/// A row as printed in the reference table.
#[derive(Debug, Clone, Copy)]
pub struct PrintedRow {
    pub xi1: u64,
    /// `None` when the printed cell is unreadable.
    pub xi2: Option<u64>,
    /// `None` when the printed cell is unreadable.
    pub support_pct: Option<f64>,
    pub variance: f64,
    pub reduction_pct: f64,
}

/// A regenerated row side by side with the printed one.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ComparedRow {
    #[serde(flatten)]
    pub row: TableRow,
    pub printed_xi2: Option<u64>,
    pub printed_support_pct: Option<f64>,
    pub printed_variance: f64,
    pub printed_reduction_pct: f64,
    /// Regenerated minus printed, in counts.
    pub dev_xi2: Option<i64>,
    /// Regenerated minus printed, in percentage points.
    pub dev_support_pp: Option<f64>,
    /// `regenerated / printed - 1`.
    pub dev_variance_rel: f64,
    /// Regenerated minus printed, in percentage points.
    pub dev_reduction_pp: f64,
    /// True when the printed row is unreadable in the source.
    pub garbled: bool,
}

/// Caption constants and printed body of one reference table.
#[derive(Debug, Clone, Copy)]
pub struct TableSpec {
    pub number: u8,
    pub c1: f64,
    pub c2: f64,
    pub budget: f64,
    /// Classical sample size fixed by the caption.
    pub n_c: u64,
    /// Stratum sample sizes fixed by the caption.
    pub n1: u64,
    pub n2: u64,
    /// Classical positive count fixed by the caption.
    pub xi: u64,
    /// Classical variance as printed in the caption.
    pub printed_v_hat_c: f64,
    /// Caveat carried into the output metadata, when the printed table is
    /// internally inconsistent.
    pub note: Option<&'static str>,
    pub printed: &'static [PrintedRow],
}

/// One regenerated table with its caption constants.
#[derive(Debug, Clone, Serialize)]
pub struct TableReport<R> {
    pub table: u8,
    pub c1: f64,
    pub c2: f64,
    pub budget: f64,
    pub n_c: u64,
    pub n1: u64,
    pub n2: u64,
    pub xi: u64,
    /// Classical variance recomputed from `xi` and `n_c`; the value every
    /// reduction in `rows` is measured against.
    pub v_hat_c: f64,
    /// Classical variance as printed in the caption.
    pub printed_v_hat_c: f64,
    pub note: Option<&'static str>,
    pub rows: Vec<R>,
}

const fn row(xi1: u64, xi2: u64, support: f64, variance: f64, reduction: f64) -> PrintedRow {
    PrintedRow {
        xi1,
        xi2: Some(xi2),
        support_pct: Some(support),
        variance,
        reduction_pct: reduction,
    }
}

static BODY_1: [PrintedRow; 8] = [
    row(10, 128, 16.14, 0.0001516, 30.94),
    row(20, 111, 16.22, 0.0001750, 20.28),
    row(30, 93, 16.19, 0.0001930, 12.08),
    row(40, 75, 16.16, 0.0002061, 6.10),
    row(50, 57, 16.13, 0.0002143, 2.33),
    row(60, 40, 16.21, 0.0002188, 0.31),
    row(70, 22, 16.18, 0.0002174, 0.94),
    // Printed as "80 && 4 1 && 6.15": the xi2 and support cells are
    // typeset beyond recovery, the variance and reduction cells are intact.
    PrintedRow {
        xi1: 80,
        xi2: None,
        support_pct: None,
        variance: 0.0002112,
        reduction_pct: 3.77,
    },
];

static BODY_2: [PrintedRow; 16] = [
    row(10, 274, 32.31, 0.0001788, 49.53),
    row(20, 257, 32.39, 0.000215, 39.29),
    row(30, 239, 32.36, 0.0002466, 30.37),
    row(40, 221, 32.33, 0.0002733, 22.83),
    row(50, 204, 32.41, 0.0002954, 16.6),
    row(60, 186, 32.38, 0.0003125, 11.78),
    row(70, 168, 32.35, 0.0003247, 8.32),
    row(80, 150, 32.32, 0.0003321, 6.24),
    row(90, 133, 32.40, 0.0003352, 5.37),
    row(100, 115, 32.37, 0.0003329, 6.01),
    row(110, 97, 32.33, 0.0003258, 8.02),
    row(120, 80, 32.41, 0.0003146, 11.17),
    row(130, 62, 32.38, 0.0002979, 15.89),
    row(140, 44, 32.35, 0.0002763, 21.99),
    row(150, 26, 32.32, 0.0002498, 29.46),
    row(160, 9, 32.40, 0.0002197, 37.97),
];

static BODY_3: [PrintedRow; 16] = [
    row(10, 421, 48.59, 0.0000947, 76.57),
    row(20, 403, 48.56, 0.0001447, 64.19),
    row(30, 385, 48.53, 0.0001899, 53.01),
    row(40, 367, 48.5, 0.0002303, 43.03),
    row(50, 350, 48.58, 0.0002652, 34.4),
    row(60, 332, 48.55, 0.0002959, 26.8),
    row(70, 314, 48.52, 0.0003217, 20.41),
    row(80, 297, 48.6, 0.0003424, 15.29),
    row(90, 279, 48.57, 0.0003586, 11.28),
    row(100, 261, 48.54, 0.0003699, 8.47),
    row(110, 243, 48.51, 0.0003764, 6.87),
    row(120, 226, 48.59, 0.0003781, 6.45),
    row(130, 208, 48.55, 0.000375, 7.22),
    row(140, 190, 48.52, 0.000367, 9.2),
    row(150, 172, 48.49, 0.0003541, 12.38),
    row(160, 155, 48.57, 0.0003368, 16.66),
];

static BODY_4: [PrintedRow; 8] = [
    row(10, 81, 17.22, 0.0002342, 4.23),
    row(20, 75, 17.2, 0.0002372, 2.98),
    row(30, 69, 17.19, 0.0002385, 2.45),
    row(40, 63, 17.17, 0.0002381, 2.63),
    row(50, 57, 17.16, 0.0002359, 3.52),
    row(60, 51, 17.14, 0.000232, 5.13),
    row(70, 45, 17.12, 0.0002263, 7.45),
    row(80, 39, 17.11, 0.0002189, 10.49),
];

static BODY_6: [PrintedRow; 16] = [
    row(10, 254, 51.49, 0.0000548, 87.23),
    row(20, 248, 51.48, 0.0000886, 79.36),
    row(30, 242, 51.46, 0.0001206, 71.89),
    row(40, 237, 51.64, 0.0001479, 65.54),
    row(50, 231, 51.63, 0.0001766, 58.85),
    row(60, 225, 51.61, 0.0002036, 52.56),
    row(70, 219, 51.6, 0.0002289, 46.67),
    row(80, 213, 51.58, 0.0002524, 41.2),
    row(90, 207, 51.56, 0.0002741, 36.13),
    row(100, 201, 51.55, 0.0002941, 31.46),
    row(110, 195, 51.53, 0.0003124, 27.21),
    row(120, 189, 51.52, 0.0003289, 23.36),
    row(130, 183, 51.5, 0.0003437, 19.92),
    row(140, 177, 51.49, 0.0003567, 16.88),
    row(150, 171, 51.47, 0.000368, 14.25),
    row(160, 165, 51.45, 0.0003775, 12.03),
];

/// All six table definitions in print order.
///
/// Table 5's printed body duplicates Table 2's byte for byte (its `xi2`
/// column exceeds the caption's `n2 = 265`), so both specs share `BODY_2`
/// and Table 5 carries the inconsistency note.
pub static SPECS: [TableSpec; 6] = [
    TableSpec {
        number: 1,
        c1: 3.0,
        c2: 1.0,
        budget: 1200.0,
        n_c: 618,
        n1: 242,
        n2: 474,
        xi: 100,
        printed_v_hat_c: 0.00021946,
        note: None,
        printed: &BODY_1,
    },
    TableSpec {
        number: 2,
        c1: 3.0,
        c2: 1.0,
        budget: 1200.0,
        n_c: 618,
        n1: 242,
        n2: 474,
        xi: 200,
        printed_v_hat_c: 0.000354193,
        note: None,
        printed: &BODY_2,
    },
    TableSpec {
        number: 3,
        c1: 3.0,
        c2: 1.0,
        budget: 1200.0,
        n_c: 618,
        n1: 242,
        n2: 474,
        xi: 300,
        printed_v_hat_c: 0.000404188,
        note: None,
        printed: &BODY_3,
    },
    TableSpec {
        number: 4,
        c1: 1.0,
        c2: 3.0,
        budget: 1200.0,
        n_c: 582,
        n1: 405,
        n2: 265,
        xi: 100,
        printed_v_hat_c: 0.00021946,
        note: Some("printed caption v_hat_c is inconsistent with n_c; reductions use the recomputed value"),
        printed: &BODY_4,
    },
    TableSpec {
        number: 5,
        c1: 1.0,
        c2: 3.0,
        budget: 1200.0,
        n_c: 582,
        n1: 405,
        n2: 265,
        xi: 200,
        printed_v_hat_c: 0.000387547,
        note: Some("printed body inconsistent with caption"),
        printed: &BODY_2,
    },
    TableSpec {
        number: 6,
        c1: 1.0,
        c2: 3.0,
        budget: 1200.0,
        n_c: 582,
        n1: 405,
        n2: 265,
        xi: 300,
        printed_v_hat_c: 0.000429142,
        note: None,
        printed: &BODY_6,
    },
];

/// Looks up a table definition by its printed number.
pub fn spec(number: u8) -> Option<&'static TableSpec> {
    SPECS.iter().find(|s| s.number == number)
}

fn stratum_fpc(n: u64, npop: u64) -> f64 {
    (npop - n) as f64 / (npop - 1) as f64
}

fn regenerate_rows(spec: &TableSpec) -> Result<(f64, Vec<TableRow>)> {
    let design = StratifiedDesign::new(TABLE_N1_POP, TABLE_N2_POP)?;
    let v_hat_c = classical_variance_estimate(spec.xi, spec.n_c, &design)?;
    let theta_c = spec.xi as f64 / spec.n_c as f64;
    let fpc1 = stratum_fpc(spec.n1, design.n1_pop);
    let fpc2 = stratum_fpc(spec.n2, design.n2_pop);
    let rows = spec
        .printed
        .iter()
        .map(|printed| {
            let s1 = TABLE_W1 * printed.xi1 as f64 / spec.n1 as f64;
            let xi2_real = spec.n2 as f64 * (theta_c - s1) / TABLE_W2;
            let xi2 = xi2_real.round().clamp(0.0, spec.n2 as f64) as u64;
            let s2 = TABLE_W2 * xi2 as f64 / spec.n2 as f64;
            let p1 = printed.xi1 as f64 / spec.n1 as f64;
            let p2 = xi2 as f64 / spec.n2 as f64;
            let variance = TABLE_W1 * TABLE_W1 * fpc1 * p1 * (1.0 - p1) / spec.n1 as f64
                + TABLE_W2 * TABLE_W2 * fpc2 * p2 * (1.0 - p2) / spec.n2 as f64;
            TableRow {
                xi1: printed.xi1,
                xi2,
                support_pct: 100.0 * (s1 + s2),
                variance,
                reduction_pct: (1.0 - variance / v_hat_c) * 100.0,
            }
        })
        .collect();
    Ok((v_hat_c, rows))
}

fn report<R>(spec: &TableSpec, v_hat_c: f64, rows: Vec<R>) -> TableReport<R> {
    TableReport {
        table: spec.number,
        c1: spec.c1,
        c2: spec.c2,
        budget: spec.budget,
        n_c: spec.n_c,
        n1: spec.n1,
        n2: spec.n2,
        xi: spec.xi,
        v_hat_c,
        printed_v_hat_c: spec.printed_v_hat_c,
        note: spec.note,
        rows,
    }
}

/// Regenerates one table from its caption constants.
pub fn regenerate(spec: &TableSpec) -> Result<TableReport<TableRow>> {
    let (v_hat_c, rows) = regenerate_rows(spec)?;
    Ok(report(spec, v_hat_c, rows))
}

/// Regenerates one table and annotates every row with the printed values
/// and the deviations from them.
pub fn compared(spec: &TableSpec) -> Result<TableReport<ComparedRow>> {
    let (v_hat_c, rows) = regenerate_rows(spec)?;
    let rows = rows
        .into_iter()
        .zip(spec.printed)
        .map(|(row, printed)| ComparedRow {
            row,
            printed_xi2: printed.xi2,
            printed_support_pct: printed.support_pct,
            printed_variance: printed.variance,
            printed_reduction_pct: printed.reduction_pct,
            dev_xi2: printed.xi2.map(|v| row.xi2 as i64 - v as i64),
            dev_support_pp: printed.support_pct.map(|v| row.support_pct - v),
            dev_variance_rel: row.variance / printed.variance - 1.0,
            dev_reduction_pp: row.reduction_pct - printed.reduction_pct,
            garbled: printed.xi2.is_none(),
        })
        .collect();
    Ok(report(spec, v_hat_c, rows))
}

/// Formats a float at six significant digits, switching to scientific
/// notation outside `[1e-4, 1e6)`.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-4..6).contains(&mag) {
        format!("{x:.5e}")
    } else {
        format!("{x:.*}", (5 - mag).max(0) as usize)
    }
}

fn opt_u64(v: Option<u64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn opt_sig6(v: Option<f64>) -> String {
    v.map(format_sig6).unwrap_or_default()
}

/// Renders regenerated tables as CSV: a header row, then one line per row
/// with the table number prepended to the five data columns.
pub fn to_csv(tables: &[TableReport<TableRow>]) -> String {
    let mut out = String::from("table,xi1,xi2,support_pct,variance,reduction_pct\n");
    for t in tables {
        for r in &t.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                t.table,
                r.xi1,
                r.xi2,
                format_sig6(r.support_pct),
                format_sig6(r.variance),
                format_sig6(r.reduction_pct),
            ));
        }
    }
    out
}

/// Renders compared tables as CSV with the printed values, deviations, and
/// a flag column ("garbled", a table-level caveat, or empty).
pub fn to_csv_compared(tables: &[TableReport<ComparedRow>]) -> String {
    let mut out = String::from(
        "table,xi1,xi2,support_pct,variance,reduction_pct,\
         printed_xi2,printed_support_pct,printed_variance,printed_reduction_pct,\
         dev_xi2,dev_support_pp,dev_variance_rel,dev_reduction_pp,flag\n",
    );
    for t in tables {
        for r in &t.rows {
            let flag = if r.garbled { "garbled" } else { t.note.unwrap_or("") };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                t.table,
                r.row.xi1,
                r.row.xi2,
                format_sig6(r.row.support_pct),
                format_sig6(r.row.variance),
                format_sig6(r.row.reduction_pct),
                opt_u64(r.printed_xi2),
                opt_sig6(r.printed_support_pct),
                format_sig6(r.printed_variance),
                format_sig6(r.printed_reduction_pct),
                r.dev_xi2.map(|v| v.to_string()).unwrap_or_default(),
                opt_sig6(r.dev_support_pp),
                format_sig6(r.dev_variance_rel),
                format_sig6(r.dev_reduction_pp),
                flag,
            ));
        }
    }
    out
}
