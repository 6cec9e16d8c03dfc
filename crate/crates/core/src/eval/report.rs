//! Report bundle: text table, CSV, SVG plot and config lock.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{CmcCurve, EvalError, TrialReport, SUMMARY_RANKS};

pub fn report_text(report: &TrialReport) -> String {
    let mut s = String::new();
    let cfg = &report.config;
    let _ = writeln!(s, "re-identification evaluation");
    let _ = writeln!(s, "fingerprint: {}", cfg.fingerprint());
    let _ = writeln!(
        s,
        "query camera: {}  gallery camera: {}",
        report.query_camera, report.gallery_camera
    );
    for line in cfg.lock_text().lines() {
        let _ = writeln!(s, "  {line}");
    }
    let _ = writeln!(s);
    let _ = write!(s, "{:<6} {:<18} {:>5} {:>5} {:>4}", "trial", "seed", "train", "test", "pca");
    for r in SUMMARY_RANKS {
        let _ = write!(s, " {:>7}", format!("R-{r}"));
    }
    let _ = writeln!(s);
    for t in &report.trials {
        let _ = write!(
            s,
            "{:<6} {:<18} {:>5} {:>5} {:>4}",
            t.index,
            format!("{:016x}", t.plan.trial_seed),
            t.plan.train_ids.len(),
            t.plan.test_ids.len(),
            t.pca_dim
        );
        for r in SUMMARY_RANKS {
            let _ = write!(s, " {:>7.4}", t.cmc.rate_at(r));
        }
        let _ = writeln!(s);
    }
    let _ = write!(s, "{:<6} {:<18} {:>5} {:>5} {:>4}", "mean", "", "", "", "");
    for (_, rate) in report.summary() {
        let _ = write!(s, " {:>7.4}", rate);
    }
    let _ = writeln!(s);
    let fallbacks: Vec<_> = report.fallbacks().collect();
    let _ = writeln!(s, "\nfallback sequences: {}", fallbacks.len());
    for f in fallbacks {
        let _ = writeln!(s, "  trial {} {}/{}", f.trial, f.camera, f.person);
    }
    s
}

/// `trial,rank,rate` rows for every trial, then the averaged curve as
/// trial `mean`.
pub fn cmc_csv(report: &TrialReport) -> String {
    let mut s = String::from("trial,rank,rate\n");
    for t in &report.trials {
        for (r, rate) in t.cmc.rates.iter().enumerate() {
            let _ = writeln!(s, "{},{},{}", t.index, r + 1, rate);
        }
    }
    for (r, rate) in report.average.rates.iter().enumerate() {
        let _ = writeln!(s, "mean,{},{}", r + 1, rate);
    }
    s
}

/// Line plot of `curve` against rank.
pub fn cmc_svg(curve: &CmcCurve, title: &str) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const LEFT: f64 = 64.0;
    const RIGHT: f64 = 24.0;
    const TOP: f64 = 40.0;
    const BOTTOM: f64 = 56.0;
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let g = curve.gallery_size().max(1);
    let x = |r: usize| {
        if g == 1 {
            LEFT + pw / 2.0
        } else {
            LEFT + pw * (r - 1) as f64 / (g - 1) as f64
        }
    };
    let y = |v: f64| TOP + ph * (1.0 - v);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    for i in 0..=5 {
        let v = i as f64 / 5.0;
        let yy = y(v);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{yy:.1}" x2="{:.1}" y2="{yy:.1}" stroke="#ddd"/>"##,
            LEFT + pw
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.1}</text>"#,
            LEFT - 6.0,
            yy + 4.0
        );
    }
    let step = g.div_ceil(10).max(1);
    let mut ticks: Vec<usize> = (1..=g).step_by(step).collect();
    if ticks.last() != Some(&g) {
        ticks.push(g);
    }
    for r in ticks {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{r}</text>"#,
            x(r),
            TOP + ph + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<path d="M{LEFT} {TOP} V{:.1} H{:.1}" fill="none" stroke="black"/>"#,
        TOP + ph,
        LEFT + pw
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">rank</text>"#,
        LEFT + pw / 2.0,
        H - 14.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">matching rate</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );
    let points: Vec<String> = curve
        .rates
        .iter()
        .enumerate()
        .map(|(i, &v)| format!("{:.1},{:.1}", x(i + 1), y(v)))
        .collect();
    let _ = writeln!(
        s,
        r##"<polyline points="{}" fill="none" stroke="#1f5fa8" stroke-width="2"/>"##,
        points.join(" ")
    );
    for (i, &v) in curve.rates.iter().enumerate() {
        let _ = writeln!(
            s,
            r##"<circle cx="{:.1}" cy="{:.1}" r="3" fill="#1f5fa8"/>"##,
            x(i + 1),
            y(v)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Writes `report.txt`, `cmc.csv`, `cmc.svg` and `config.lock` into `dir`.
pub fn write_report_bundle(report: &TrialReport, dir: impl AsRef<Path>) -> Result<(), EvalError> {
    let dir = dir.as_ref();
    let io = |e: std::io::Error| EvalError::Io(format!("{}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io)?;
    let title = format!("CMC, mean of {} trials", report.trials.len());
    let files = [
        ("report.txt", report_text(report)),
        ("cmc.csv", cmc_csv(report)),
        ("cmc.svg", cmc_svg(&report.average, &title)),
        ("config.lock", report.config.lock_text()),
    ];
    for (name, body) in files {
        fs::write(dir.join(name), body).map_err(io)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{EvalConfig, SplitPlan, TrialResult};

    fn report() -> TrialReport {
        let trial = |i: usize, rates: Vec<f64>| TrialResult {
            index: i,
            plan: SplitPlan {
                trial_seed: i as u64,
                train_ids: ["a".to_string()].into(),
                test_ids: ["b".to_string(), "c".to_string()].into(),
            },
            cmc: CmcCurve { rates },
            fallbacks: vec![],
            pca_dim: 3,
            fit_identities: ["a".to_string()].into(),
            similar_pairs: 1,
            dissimilar_pairs: 0,
        };
        TrialReport {
            config: EvalConfig::default(),
            query_camera: "cam1".into(),
            gallery_camera: "cam2".into(),
            trials: vec![trial(0, vec![0.5, 1.0]), trial(1, vec![1.0, 1.0])],
            average: CmcCurve { rates: vec![0.75, 1.0] },
        }
    }

    #[test]
    fn csv_rows() {
        let csv = cmc_csv(&report());
        assert_eq!(csv, "trial,rank,rate\n0,1,0.5\n0,2,1\n1,1,1\n1,2,1\nmean,1,0.75\nmean,2,1\n");
    }

    #[test]
    fn text_has_summary_columns() {
        let text = report_text(&report());
        assert!(text.contains("R-1") && text.contains("R-5") && text.contains("R-20"));
        assert!(text.contains("mean"));
        assert!(text.contains("0.7500"));
    }

    #[test]
    fn svg_is_well_formed() {
        let svg = cmc_svg(&report().average, "a < b");
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(svg.contains("a &lt; b"));
    }

    #[test]
    fn bundle_files() {
        let tmp = tempfile::tempdir().unwrap();
        write_report_bundle(&report(), tmp.path().join("out")).unwrap();
        for f in ["report.txt", "cmc.csv", "cmc.svg", "config.lock"] {
            assert!(tmp.path().join("out").join(f).is_file());
        }
    }
}
