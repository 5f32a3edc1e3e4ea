use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{EvalReport, ReportError};
use crate::fsutil::write_atomic;
use crate::metrics::{BinomialCi, Interval};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Markdown,
    Json,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 3] = [ReportFormat::Csv, ReportFormat::Markdown, ReportFormat::Json];

    pub fn files(self) -> &'static [&'static str] {
        match self {
            ReportFormat::Csv => &CSV_FILES,
            ReportFormat::Markdown => &["report.md"],
            ReportFormat::Json => &["report.json"],
        }
    }
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown report format '{other}' (csv, markdown, json)")),
        }
    }
}

const CSV_FILES: [&str; 6] =
    ["detection.csv", "localization.csv", "concordance.csv", "acceptance.csv", "sus.csv", "roc.csv"];

/// Every file `write_report` produces when all formats are requested.
pub const REPORT_FILES: [&str; 9] = [
    "detection.csv",
    "localization.csv",
    "concordance.csv",
    "acceptance.csv",
    "sus.csv",
    "roc.csv",
    "report.json",
    "report.md",
    "config.json",
];

fn f6(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.6}")
    }
}

fn o6(x: Option<f64>) -> String {
    x.map(f6).unwrap_or_default()
}

fn ci6(ci: Option<&BinomialCi<f64>>) -> [String; 3] {
    match ci {
        Some(c) => [f6(c.estimate), f6(c.lower), f6(c.upper)],
        None => Default::default(),
    }
}

fn iv6(iv: Option<&Interval<f64>>) -> [String; 3] {
    match iv {
        Some(c) => [f6(c.estimate), f6(c.lower), f6(c.upper)],
        None => Default::default(),
    }
}

fn md_ci(estimate: f64, lower: f64, upper: f64) -> String {
    format!("{estimate:.3} ({lower:.3} - {upper:.3})")
}

fn md_binomial(ci: Option<&BinomialCi<f64>>) -> String {
    ci.map(|c| md_ci(c.estimate, c.lower, c.upper)).unwrap_or_else(|| "n/a".into())
}

fn md_interval(iv: Option<&Interval<f64>>) -> String {
    iv.map(|c| md_ci(c.estimate, c.lower, c.upper)).unwrap_or_else(|| "n/a".into())
}

type CsvTable = fn(&EvalReport) -> Result<Vec<u8>, csv::Error>;

fn csv_bytes(header: &[&str], rows: Vec<Vec<String>>) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

fn detection_csv(r: &EvalReport) -> Result<Vec<u8>, csv::Error> {
    let header = [
        "condition",
        "positives",
        "negatives",
        "auroc",
        "auroc_lower",
        "auroc_upper",
        "threshold",
        "threshold_source",
        "tp",
        "fp",
        "tn",
        "fn",
        "sensitivity",
        "sensitivity_lower",
        "sensitivity_upper",
        "specificity",
        "specificity_lower",
        "specificity_upper",
        "ppv",
        "ppv_lower",
        "ppv_upper",
        "npv",
        "npv_lower",
        "npv_upper",
    ];
    let rows = r
        .detection
        .iter()
        .map(|d| {
            let mut row = vec![d.condition.to_string(), d.positives.to_string(), d.negatives.to_string()];
            row.extend(iv6(d.auroc.as_ref()));
            row.push(o6(d.threshold));
            row.push(serde_json::to_value(d.threshold_source).unwrap().as_str().unwrap_or_default().to_string());
            row.extend([d.counts.tp, d.counts.fp, d.counts.tn, d.counts.fn_].map(|c| c.to_string()));
            for ci in [&d.sensitivity, &d.specificity, &d.ppv, &d.npv] {
                row.extend(ci6(ci.as_ref()));
            }
            row
        })
        .collect();
    csv_bytes(&header, rows)
}

fn localization_csv(r: &EvalReport) -> Result<Vec<u8>, csv::Error> {
    let header = [
        "condition",
        "lesions",
        "hits",
        "llf",
        "llf_lower",
        "llf_upper",
        "false_positives",
        "images",
        "cases",
        "nlf",
        "nlf_lower",
        "nlf_upper",
        "false_positives_per_case",
        "mean_iogt",
        "mean_iohm",
    ];
    let rows = r
        .localization
        .iter()
        .map(|l| {
            let s = &l.summary;
            let mut row = vec![l.condition.to_string(), s.lesions.to_string(), s.hits.to_string()];
            row.extend(ci6(s.llf.as_ref()));
            row.extend([s.false_positives, s.images, s.cases].map(|c| c.to_string()));
            row.extend(iv6(Some(&s.nlf)));
            row.extend([f6(s.false_positives_per_case), o6(s.mean_iogt), o6(s.mean_iohm)]);
            row
        })
        .collect();
    csv_bytes(&header, rows)
}

fn concordance_csv(r: &EvalReport) -> Result<Vec<u8>, csv::Error> {
    let header = ["kind", "agree", "edit", "add", "reject", "concordant", "total", "rate", "rate_lower", "rate_upper"];
    let mut rows = Vec::new();
    if let Some(c) = &r.concordance {
        for (kind, rate) in [("classification", &c.classification), ("localization", &c.localization)] {
            let n = rate.counts;
            let mut row = vec![kind.to_string()];
            row.extend([n.agree, n.edit, n.add, n.reject, n.concordant(), n.total()].map(|c| c.to_string()));
            row.extend(ci6(Some(&rate.rate)));
            rows.push(row);
        }
    }
    csv_bytes(&header, rows)
}

fn acceptance_csv(r: &EvalReport) -> Result<Vec<u8>, csv::Error> {
    let header = ["reviewer_id", "reviewed", "accepted", "total_cases", "rate", "rate_lower", "rate_upper"];
    let mut rows = Vec::new();
    if let Some(a) = &r.acceptance {
        for rv in &a.reviewers {
            rows.push(vec![
                rv.reviewer_id.clone(),
                rv.reviewed.to_string(),
                rv.accepted_total.to_string(),
                a.total_cases.to_string(),
                f6(rv.rate),
                String::new(),
                String::new(),
            ]);
        }
        rows.push(vec![
            "mean".into(),
            String::new(),
            f6(a.mean_accepted),
            a.total_cases.to_string(),
            f6(a.rate),
            f6(a.ci.lower),
            f6(a.ci.upper),
        ]);
    }
    csv_bytes(&header, rows)
}

fn sus_csv(r: &EvalReport) -> Result<Vec<u8>, csv::Error> {
    let header = ["participant_id", "score", "lower", "upper"];
    let mut rows = Vec::new();
    if let Some(s) = &r.sus {
        for (id, score) in &s.scores {
            rows.push(vec![id.clone(), f6(*score), String::new(), String::new()]);
        }
        let (lo, hi) = s.ci.as_ref().map(|c| (f6(c.lower), f6(c.upper))).unwrap_or_default();
        rows.push(vec!["mean".into(), f6(s.mean), lo, hi]);
    }
    csv_bytes(&header, rows)
}

fn roc_csv(r: &EvalReport) -> Result<Vec<u8>, csv::Error> {
    let rows = r
        .roc
        .iter()
        .flat_map(|s| s.points.iter().map(|p| vec![s.condition.to_string(), f6(p.threshold), f6(p.fpr), f6(p.tpr)]))
        .collect();
    csv_bytes(&["condition", "threshold", "fpr", "tpr"], rows)
}

/// Human-readable summary. Estimates and bounds are shown to 3 decimals.
pub fn render_markdown(r: &EvalReport) -> String {
    let mut s = String::new();
    let pct = (r.config.level * 100.0).round();
    let _ = writeln!(s, "# Evaluation report: {}\n", r.dataset_id);
    let _ = writeln!(s, "Cases: {}. Tool version {}. Intervals are {pct}%.\n", r.cases, r.tool_version);

    let _ = writeln!(s, "## Detection\n");
    let _ = writeln!(s, "| Condition | Pos | Neg | AUROC | Threshold | Sensitivity | Specificity | PPV | NPV |");
    let _ = writeln!(s, "|---|---|---|---|---|---|---|---|---|");
    for d in &r.detection {
        let thr = d.threshold.map(|t| format!("{t:.3}")).unwrap_or_else(|| "none".into());
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {} | {} | {} | {} | {} |",
            d.condition,
            d.positives,
            d.negatives,
            md_interval(d.auroc.as_ref()),
            thr,
            md_binomial(d.sensitivity.as_ref()),
            md_binomial(d.specificity.as_ref()),
            md_binomial(d.ppv.as_ref()),
            md_binomial(d.npv.as_ref()),
        );
    }

    let _ = writeln!(s, "\n## Localization\n");
    let _ = writeln!(s, "| Condition | Lesions | Hits | LLF | FP | NLF (per image) |");
    let _ = writeln!(s, "|---|---|---|---|---|---|");
    for l in &r.localization {
        let m = &l.summary;
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {} | {} |",
            l.condition,
            m.lesions,
            m.hits,
            md_binomial(m.llf.as_ref()),
            m.false_positives,
            md_interval(Some(&m.nlf)),
        );
    }

    if let Some(c) = &r.concordance {
        let _ = writeln!(s, "\n## Concordance\n");
        let _ = writeln!(s, "| Kind | Agree | Edit | Add | Reject | Rate |");
        let _ = writeln!(s, "|---|---|---|---|---|---|");
        for (kind, rate) in [("Classification", &c.classification), ("Localization", &c.localization)] {
            let n = rate.counts;
            let _ = writeln!(
                s,
                "| {kind} | {} | {} | {} | {} | {} |",
                n.agree,
                n.edit,
                n.add,
                n.reject,
                md_binomial(Some(&rate.rate))
            );
        }
    }

    if let Some(a) = &r.acceptance {
        let _ = writeln!(s, "\n## Acceptance\n");
        let _ = writeln!(
            s,
            "Auto-accepted {} of {}; {} reviewer(s); mean accepted {:.1}.\n",
            a.auto_accepted,
            a.total_cases,
            a.reviewers.len(),
            a.mean_accepted
        );
        let _ = writeln!(s, "Acceptance rate: {}", md_ci(a.rate, a.ci.lower, a.ci.upper));
    }

    if let Some(u) = &r.sus {
        let _ = writeln!(s, "\n## Usability\n");
        let ci = u.ci.as_ref().map(|c| format!(" ({:.3} - {:.3})", c.lower, c.upper)).unwrap_or_default();
        let _ = writeln!(s, "SUS mean {:.3}{ci} over {} participant(s).", u.mean, u.scores.len());
    }
    s
}

fn put(dir: &Path, name: &str, bytes: &[u8], written: &mut Vec<PathBuf>) -> Result<(), ReportError> {
    let p = dir.join(name);
    write_atomic(&p, bytes).map_err(|source| ReportError::Io { path: p.display().to_string(), source })?;
    written.push(p);
    Ok(())
}

fn json_bytes<T: Serialize>(value: &T, name: &str) -> Result<Vec<u8>, ReportError> {
    let mut v = serde_json::to_vec_pretty(value).map_err(|source| ReportError::Json { path: name.into(), source })?;
    v.push(b'\n');
    Ok(v)
}

/// Writes the requested formats into `out_dir` plus a `config.json` snapshot.
/// Sections without data still get a header-only CSV so downstream readers
/// always find the same files.
pub fn write_report(
    report: &EvalReport,
    out_dir: &Path,
    formats: &[ReportFormat],
) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(out_dir).map_err(|source| ReportError::Io { path: out_dir.display().to_string(), source })?;
    let mut written = Vec::new();
    let csv_err = |name: &str| {
        let path = out_dir.join(name).display().to_string();
        move |e: csv::Error| ReportError::Io { path, source: std::io::Error::other(e) }
    };
    if formats.contains(&ReportFormat::Csv) {
        let tables: [(&str, CsvTable); 6] = [
            ("detection.csv", detection_csv),
            ("localization.csv", localization_csv),
            ("concordance.csv", concordance_csv),
            ("acceptance.csv", acceptance_csv),
            ("sus.csv", sus_csv),
            ("roc.csv", roc_csv),
        ];
        for (name, f) in tables {
            let bytes = f(report).map_err(csv_err(name))?;
            put(out_dir, name, &bytes, &mut written)?;
        }
    }
    if formats.contains(&ReportFormat::Json) {
        put(out_dir, "report.json", &json_bytes(report, "report.json")?, &mut written)?;
    }
    if formats.contains(&ReportFormat::Markdown) {
        put(out_dir, "report.md", render_markdown(report).as_bytes(), &mut written)?;
    }
    put(out_dir, "config.json", &json_bytes(&report.config, "config.json")?, &mut written)?;
    Ok(written)
}
