//! Regression table export: a machine-readable CSV and an aligned text table
//! with models in columns I, II, III, ...

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{AnalyticsError, RegressionFit};

/// Significance stars: `***` p<0.001, `**` p<0.01, `*` p<0.05.
pub fn stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

pub fn roman(mut n: usize) -> String {
    const TABLE: [(usize, &str); 13] = [
        (1000, "M"), (900, "CM"), (500, "D"), (400, "CD"), (100, "C"), (90, "XC"),
        (50, "L"), (40, "XL"), (10, "X"), (9, "IX"), (5, "V"), (4, "IV"), (1, "I"),
    ];
    let mut out = String::new();
    for (value, glyph) in TABLE {
        while n >= value {
            out.push_str(glyph);
            n -= value;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableExport {
    pub csv: String,
    pub text: String,
}

/// Render fits side by side. Intercepts and fixed-effect dummies are left
/// out of the coefficient block; absorbed groups appear as `<name> FE` rows.
pub fn export_table(fits: &[RegressionFit]) -> Result<TableExport, AnalyticsError> {
    if fits.is_empty() {
        return Err(AnalyticsError::EmptyInput);
    }
    Ok(TableExport {
        csv: table_csv(fits)?,
        text: table_text(fits),
    })
}

fn table_csv(fits: &[RegressionFit]) -> Result<String, AnalyticsError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| AnalyticsError::InvalidInput(e.to_string());
    w.write_record(["model", "term", "estimate", "std_error", "p_value", "stars"])
        .map_err(csv_err)?;
    for (i, fit) in fits.iter().enumerate() {
        let model = roman(i + 1);
        for t in &fit.terms {
            w.write_record([
                model.as_str(),
                t.name.as_str(),
                &t.estimate.to_string(),
                &t.std_error.to_string(),
                &t.p_value.to_string(),
                stars(t.p_value),
            ])
            .map_err(csv_err)?;
        }
        w.write_record([model.as_str(), "_n_obs", &fit.n_obs.to_string(), "", "", ""])
            .map_err(csv_err)?;
        w.write_record([model.as_str(), "_r_squared", &fit.r_squared.to_string(), "", "", ""])
            .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| AnalyticsError::InvalidInput(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn table_text(fits: &[RegressionFit]) -> String {
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut header = vec![String::new()];
    header.extend((1..=fits.len()).map(roman));
    rows.push(header);

    let mut terms: Vec<&str> = Vec::new();
    for fit in fits {
        for t in fit.covariate_terms() {
            if !terms.contains(&t.name.as_str()) {
                terms.push(&t.name);
            }
        }
    }
    for name in &terms {
        let mut est = vec![name.to_string()];
        let mut se = vec![String::new()];
        for fit in fits {
            match fit.term(name) {
                Some(t) => {
                    est.push(format!("{:.2}{}", t.estimate, stars(t.p_value)));
                    se.push(format!("({:.2})", t.std_error));
                }
                None => {
                    est.push(String::new());
                    se.push(String::new());
                }
            }
        }
        rows.push(est);
        rows.push(se);
    }
    let mut fe_names: Vec<&str> = Vec::new();
    for fit in fits {
        for f in &fit.fixed_effects {
            if !fe_names.contains(&f.as_str()) {
                fe_names.push(f);
            }
        }
    }
    for fe in fe_names {
        let mut row = vec![format!("{fe} FE")];
        row.extend(fits.iter().map(|f| {
            if f.fixed_effects.iter().any(|x| x == fe) { "Yes" } else { "No" }.to_string()
        }));
        rows.push(row);
    }
    let mut n_row = vec!["N".to_string()];
    n_row.extend(fits.iter().map(|f| f.n_obs.to_string()));
    rows.push(n_row);

    let widths: Vec<usize> = (0..rows[0].len())
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &rows {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                if c == 0 {
                    format!("{cell:<w$}", w = widths[c])
                } else {
                    format!("{cell:>w$}", w = widths[c])
                }
            })
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    out.push_str("*** p<0.001; ** p<0.01; * p<0.05\n");
    out
}

/// Estimates recovered from the exported CSV: model → term → (estimate, se).
pub fn parse_table_csv(
    csv_text: &str,
) -> Result<BTreeMap<String, BTreeMap<String, (f64, f64)>>, AnalyticsError> {
    let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
    let mut out: BTreeMap<String, BTreeMap<String, (f64, f64)>> = BTreeMap::new();
    for row in reader.records() {
        let row = row.map_err(|e| AnalyticsError::InvalidInput(e.to_string()))?;
        if row[1].starts_with('_') {
            continue;
        }
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| AnalyticsError::InvalidInput(format!("bad number `{s}`")))
        };
        out.entry(row[0].to_string())
            .or_default()
            .insert(row[1].to_string(), (num(&row[2])?, num(&row[3])?));
    }
    Ok(out)
}
