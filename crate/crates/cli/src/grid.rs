//! Text rendering of a mode map over the chart grid: one line per grid row,
//! one symbol per term. Layout comes from the chips' grid fields.

use std::collections::BTreeSet;

use colorsig::color::MunsellChart;
use colorsig::metrics::ModeMap;

const SYMBOLS: &[u8] = b"0123456789abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ";

fn symbol(term: usize) -> char {
    if term < SYMBOLS.len() {
        SYMBOLS[term] as char
    } else {
        '#'
    }
}

/// Render the partition as a grid, `.` marking grid cells with no chip, plus
/// a legend mapping symbols to term names when names are given.
pub fn render_mode_map(chart: &MunsellChart, map: &ModeMap, terms: Option<&[String]>) -> String {
    assert_eq!(chart.len(), map.len(), "one assignment per chip");
    let rows: BTreeSet<char> = chart.chips().iter().map(|c| c.grid_row).collect();
    let max_col = chart.chips().iter().map(|c| c.grid_col).max().unwrap_or(0);

    let mut out = String::new();
    for row in rows {
        out.push(row);
        out.push(' ');
        for col in 0..=max_col {
            let chip = chart
                .chips()
                .iter()
                .position(|c| c.grid_row == row && c.grid_col == col);
            match chip {
                Some(i) => out.push(symbol(map.assignment[i])),
                None => out.push('.'),
            }
        }
        out.push('\n');
    }
    if let Some(terms) = terms {
        let used: BTreeSet<usize> = map.assignment.iter().copied().collect();
        for t in used {
            out.push_str(&format!("{} = {}\n", symbol(t), terms.get(t).map_or("?", |s| s)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use colorsig::color::ColorChip;

    #[test]
    fn renders_rows_and_legend() {
        let chips = vec![
            ColorChip { id: 1, grid_row: 'A', grid_col: 0, lab: [90.0, 0.0, 0.0] },
            ColorChip { id: 2, grid_row: 'B', grid_col: 0, lab: [50.0, 10.0, 0.0] },
            ColorChip { id: 3, grid_row: 'B', grid_col: 2, lab: [50.0, 0.0, 10.0] },
        ];
        let chart = MunsellChart::new(chips).unwrap();
        let map = ModeMap { assignment: vec![0, 1, 0] };
        let terms = vec!["light".to_string(), "dark".to_string()];
        let text = render_mode_map(&chart, &map, Some(&terms));
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "A 0..");
        assert_eq!(lines[1], "B 1.0");
        assert_eq!(lines[2], "0 = light");
        assert_eq!(lines[3], "1 = dark");
    }
}
