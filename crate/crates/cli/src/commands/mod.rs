pub mod analyze_wcs;
pub mod frontier;
pub mod game;
pub mod synth_wcs;
pub mod train;

use std::path::Path;

use colorsig::color::{ChartLayout, MunsellChart};
use colorsig::frontier::{FrontierCurve, FrontierPoint};
use colorsig::{Error, Result};

/// Load a chart file with the named layout (`simple` or `wcs`).
pub fn load_chart(path: &Path, layout: &str) -> Result<MunsellChart> {
    let layout = ChartLayout::by_name(layout)?;
    MunsellChart::from_file(path, &layout)
}

/// Read a frontier CSV written by the `frontier ib` command back into a
/// curve. Columns are located by header name.
pub fn read_frontier_csv(path: &Path) -> Result<FrontierCurve> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let header = lines
        .next()
        .map(|(_, l)| l.split(',').map(str::to_string).collect::<Vec<_>>())
        .unwrap_or_default();
    let col = |name: &str| -> Result<usize> {
        header.iter().position(|h| h == name).ok_or_else(|| Error::MalformedLine {
            path: path.to_path_buf(),
            line: 1,
            reason: format!("missing column {name:?}"),
        })
    };
    let (b, c, a) = (col("beta")?, col("complexity_nats")?, col("accuracy_nats")?);
    let mut points = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let parse = |i: usize| -> Result<f64> {
            fields
                .get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::MalformedLine {
                    path: path.to_path_buf(),
                    line: idx + 1,
                    reason: format!("bad or missing number in field {i}"),
                })
        };
        points.push(FrontierPoint {
            beta: parse(b)?,
            complexity: parse(c)?,
            accuracy: parse(a)?,
            encoder: None,
        });
    }
    if points.is_empty() {
        return Err(Error::MalformedLine {
            path: path.to_path_buf(),
            line: 1,
            reason: "no frontier points".into(),
        });
    }
    Ok(FrontierCurve::from_points(points))
}
