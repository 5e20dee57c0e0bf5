use super::sweep::ScenarioResult;

#[derive(Clone, Debug, PartialEq)]
pub struct RowVerdict {
    pub scenario_id: String,
    pub axis_value: f64,
    pub abs_diff: f64,
    /// The model value lies inside the simulation's confidence interval.
    pub inside_ci: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Comparison {
    pub rows: Vec<RowVerdict>,
}

impl Comparison {
    /// Share of compared rows whose model value is inside the interval.
    /// `None` when no row carries both a simulation and a model value.
    pub fn fraction_inside(&self) -> Option<f64> {
        if self.rows.is_empty() {
            return None;
        }
        Some(self.rows.iter().filter(|r| r.inside_ci).count() as f64 / self.rows.len() as f64)
    }
}

/// Rows without simulated or model columns are skipped.
pub fn compare(result: &ScenarioResult) -> Comparison {
    let rows = result
        .rows
        .iter()
        .filter_map(|row| {
            let (rate, lo, hi, model) = (row.success_rate?, row.ci_low?, row.ci_high?, row.model_p_succ?);
            Some(RowVerdict {
                scenario_id: row.scenario_id.clone(),
                axis_value: row.axis_value,
                abs_diff: (rate - model).abs(),
                // Cells carry six decimals; allow for that rounding.
                inside_ci: lo - 5e-7 <= model && model <= hi + 5e-7,
            })
        })
        .collect();
    Comparison { rows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::SweepRow;

    fn row(rate: f64, lo: f64, hi: f64, model: f64) -> SweepRow {
        SweepRow {
            success_rate: Some(rate),
            ci_low: Some(lo),
            ci_high: Some(hi),
            model_p_succ: Some(model),
            ..SweepRow::default()
        }
    }

    #[test]
    fn verdicts_and_fraction() {
        let result = ScenarioResult {
            rows: vec![
                row(1.0, 0.99, 1.0, 1.0),
                row(0.8, 0.75, 0.85, 0.9),
                SweepRow { error: Some("bad".into()), ..SweepRow::default() },
            ],
        };
        let c = compare(&result);
        assert_eq!(c.rows.len(), 2);
        assert!(c.rows[0].inside_ci && !c.rows[1].inside_ci);
        assert!((c.rows[1].abs_diff - 0.1).abs() < 1e-12);
        assert_eq!(c.fraction_inside(), Some(0.5));
        assert_eq!(compare(&ScenarioResult::default()).fraction_inside(), None);
    }
}
