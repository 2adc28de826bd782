use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;

use super::batch::TrialResult;
use super::classify::TrialOutcome;

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub scenario: String,
    pub trials: usize,
    pub counts: [usize; 4],
    /// Percentages in tenths, summing to exactly 1000.
    pub tenths: [u32; 4],
    pub mean_initiation_s: Option<f64>,
}

impl SummaryRow {
    pub fn percent(&self, k: usize) -> f64 {
        self.tenths[k] as f64 / 10.0
    }
}

/// Largest-remainder rounding of `counts` to tenths of a percent; the parts sum to 1000.
/// Ties in the remainder go to the earlier category.
pub fn percent_tenths(counts: &[usize; 4]) -> [u32; 4] {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return [0; 4];
    }
    let mut out = [0u32; 4];
    let mut rems = [(0usize, 0usize); 4];
    for k in 0..4 {
        let scaled = counts[k] * 1000;
        out[k] = (scaled / total) as u32;
        rems[k] = (scaled % total, k);
    }
    let mut left = 1000 - out.iter().sum::<u32>();
    rems.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, k) in rems.iter() {
        if left == 0 {
            break;
        }
        out[k] += 1;
        left -= 1;
    }
    out
}

/// One row per scenario, in order of first appearance.
pub fn summarize(results: &[TrialResult]) -> Vec<SummaryRow> {
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<&str, Vec<&TrialResult>> = BTreeMap::new();
    for r in results {
        if !groups.contains_key(r.scenario.as_str()) {
            order.push(r.scenario.clone());
        }
        groups.entry(&r.scenario).or_default().push(r);
    }
    order
        .iter()
        .map(|name| {
            let rows = &groups[name.as_str()];
            let mut counts = [0usize; 4];
            for r in rows {
                let k = TrialOutcome::ALL.iter().position(|o| *o == r.outcome).expect("known outcome");
                counts[k] += 1;
            }
            let inits: Vec<f64> = rows.iter().filter_map(|r| r.initiation_time_s).collect();
            let mean_initiation_s = (!inits.is_empty()).then(|| inits.iter().sum::<f64>() / inits.len() as f64);
            SummaryRow { scenario: name.clone(), trials: rows.len(), counts, tenths: percent_tenths(&counts), mean_initiation_s }
        })
        .collect()
}

#[derive(Serialize)]
struct SummaryCsv<'a> {
    scenario: &'a str,
    trials: usize,
    success: usize,
    safety_stop: usize,
    grasp_fail: usize,
    detection_fail: usize,
    success_pct: String,
    safety_stop_pct: String,
    grasp_fail_pct: String,
    detection_fail_pct: String,
    mean_initiation_s: String,
}

pub fn write_summary_csv<W: Write>(w: W, rows: &[SummaryRow]) -> csv::Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        let pct = |k: usize| format!("{:.1}", r.percent(k));
        wr.serialize(SummaryCsv {
            scenario: &r.scenario,
            trials: r.trials,
            success: r.counts[0],
            safety_stop: r.counts[1],
            grasp_fail: r.counts[2],
            detection_fail: r.counts[3],
            success_pct: pct(0),
            safety_stop_pct: pct(1),
            grasp_fail_pct: pct(2),
            detection_fail_pct: pct(3),
            mean_initiation_s: r.mean_initiation_s.map(|m| format!("{m:.6}")).unwrap_or_default(),
        })?;
    }
    wr.flush()?;
    Ok(())
}

/// Fixed-width outcome table, one line per scenario plus a total line.
pub fn format_table(results: &[TrialResult]) -> String {
    let mut rows = summarize(results);
    if rows.len() > 1 {
        let all: Vec<TrialResult> = results.iter().map(|r| TrialResult { scenario: "Total".into(), ..*r }).collect();
        rows.extend(summarize(&all));
    }
    let width = rows.iter().map(|r| r.scenario.len()).max().unwrap_or(0).max(8);
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<width$} {:>6} {:>8} {:>11} {:>10} {:>14} {:>12}",
        "Scenario", "Trials", "Success", "SafetyStop", "GraspFail", "DetectionFail", "Initiation"
    );
    for r in &rows {
        let init = r.mean_initiation_s.map(|m| format!("{m:.5} s")).unwrap_or_else(|| "-".into());
        let _ = writeln!(
            s,
            "{:<width$} {:>6} {:>8.1} {:>11.1} {:>10.1} {:>14.1} {:>12}",
            r.scenario,
            r.trials,
            r.percent(0),
            r.percent(1),
            r.percent(2),
            r.percent(3),
            init
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn thirds_round_to_100() {
        assert_eq!(percent_tenths(&[1, 1, 1, 0]), [334, 333, 333, 0]);
        assert_eq!(percent_tenths(&[40, 0, 0, 0]), [1000, 0, 0, 0]);
    }

    proptest! {
        #[test]
        fn always_sums_to_1000(c in prop::array::uniform4(0usize..500)) {
            prop_assume!(c.iter().sum::<usize>() > 0);
            let t = percent_tenths(&c);
            prop_assert_eq!(t.iter().sum::<u32>(), 1000);
            let total: usize = c.iter().sum();
            for k in 0..4 {
                let exact = c[k] as f64 * 1000.0 / total as f64;
                prop_assert!((t[k] as f64 - exact).abs() < 1.0);
            }
        }
    }

    #[test]
    fn table_has_total_line() {
        let mk = |s: &str, o| TrialResult { scenario: s.into(), trial: 0, outcome: o, initiation_time_s: Some(0.2), total_time_s: 1.0, abort_count: 0 };
        let t = format_table(&[mk("a", TrialOutcome::Success), mk("b", TrialOutcome::GraspFail)]);
        assert_eq!(t.lines().count(), 4);
        assert!(t.lines().last().unwrap().starts_with("Total"));
    }
}
