use std::fmt::Write;

use super::{AttributionResult, FeatureRanking};
use crate::data::Matrix;

/// One line per explained row: `row,<feature...>,base,output`.
pub fn phi_csv(attr: &AttributionResult, names: &[String]) -> String {
    let mut out = String::from("row");
    for n in names {
        out.push(',');
        out.push_str(n);
    }
    out.push_str(",base_value,model_output\n");
    for (i, (phi, y)) in attr.phi.iter().zip(&attr.model_output).enumerate() {
        write!(out, "{i}").unwrap();
        for p in phi {
            write!(out, ",{p}").unwrap();
        }
        writeln!(out, ",{},{y}", attr.base_value).unwrap();
    }
    out
}

/// Long-format `(row, feature, phi, value)` triplets for beeswarm plots.
pub fn beeswarm_csv(attr: &AttributionResult, rows: &Matrix, names: &[String]) -> String {
    let mut out = String::from("row,feature,phi,value\n");
    for (i, phi) in attr.phi.iter().enumerate() {
        for (j, p) in phi.iter().enumerate() {
            writeln!(out, "{i},{},{p},{}", names[j], rows.get(i, j)).unwrap();
        }
    }
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Horizontal bar chart of the top `k` mean `|phi|` values.
pub fn ranking_svg(ranking: &FeatureRanking, k: usize) -> String {
    let entries = &ranking.entries[..k.min(ranking.entries.len())];
    let (label_w, bar_w, row_h) = (110.0, 360.0, 20.0);
    let height = row_h * entries.len() as f64 + 30.0;
    let max = entries.iter().map(|e| e.mean_abs_phi).fold(0.0, f64::max);
    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{height}" font-family="sans-serif" font-size="12">"#,
        label_w + bar_w + 90.0
    )
    .unwrap();
    for (i, e) in entries.iter().enumerate() {
        let y = 10.0 + row_h * i as f64;
        let w = if max > 0.0 { bar_w * e.mean_abs_phi / max } else { 0.0 };
        writeln!(
            svg,
            r##"<text x="{}" y="{}" text-anchor="end">{}</text><rect x="{label_w}" y="{y}" width="{w:.2}" height="{}" fill="#1f77b4"/><text x="{}" y="{}">{:.4}</text>"##,
            label_w - 6.0,
            y + 13.0,
            escape(&e.feature),
            row_h - 4.0,
            label_w + w + 4.0,
            y + 13.0,
            e.mean_abs_phi
        )
        .unwrap();
    }
    writeln!(
        svg,
        r#"<text x="{label_w}" y="{}">mean |SHAP value|</text>"#,
        height - 6.0
    )
    .unwrap();
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shap::{rank_features, ValueKind};

    fn attr() -> AttributionResult {
        AttributionResult {
            base_value: 0.5,
            phi: vec![vec![0.1, -0.2], vec![0.0, 0.3]],
            model_output: vec![0.4, 0.8],
            value_kind: ValueKind::Probability,
        }
    }

    #[test]
    fn csv_shapes() {
        let names = vec!["a".to_string(), "b<c".to_string()];
        let text = phi_csv(&attr(), &names);
        assert_eq!(text.lines().count(), 3);
        assert_eq!(text.lines().nth(1).unwrap(), "0,0.1,-0.2,0.5,0.4");
        let x = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]);
        let bees = beeswarm_csv(&attr(), &x, &names);
        assert_eq!(bees.lines().count(), 5);
        assert_eq!(bees.lines().nth(4).unwrap(), "1,b<c,0.3,4");
    }

    #[test]
    fn svg_has_one_bar_per_entry() {
        let names = vec!["a".to_string(), "b<c".to_string()];
        let ranking = rank_features(&attr(), &names).unwrap();
        let svg = ranking_svg(&ranking, 10);
        assert_eq!(svg.matches("<rect").count(), 2);
        assert!(svg.contains("b&lt;c"));
        assert!(svg.ends_with("</svg>\n"));
    }
}
