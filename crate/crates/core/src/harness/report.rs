use std::fmt::Write;

use super::{select_medians, BenchRow};

/// Phase shares in tenths of a percent, rounded by largest remainder so the
/// three always sum to exactly 1000. A zero total gives all zeros.
fn phase_tenths(parts: [u64; 3]) -> [u64; 3] {
    let total: u64 = parts.iter().sum();
    if total == 0 {
        return [0; 3];
    }
    let exact = parts.map(|p| p as u128 * 1000);
    let mut tenths = exact.map(|e| (e / total as u128) as u64);
    let mut order = [0usize, 1, 2];
    order.sort_by_key(|&i| std::cmp::Reverse(exact[i] % total as u128));
    let short = 1000 - tenths.iter().sum::<u64>();
    for &i in order.iter().take(short as usize) {
        tenths[i] += 1;
    }
    tenths
}

fn pct(tenths: u64) -> String {
    format!("{}.{}", tenths / 10, tenths % 10)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |c| format!("{c:.3}"))
}

/// Renders one table per experiment, keeping only the median repetition of
/// each cell.
pub fn markdown_report(rows: &[BenchRow]) -> String {
    let medians = select_medians(rows);
    let mut experiments: Vec<&str> = Vec::new();
    for row in &medians {
        if !experiments.contains(&row.experiment.as_str()) {
            experiments.push(&row.experiment);
        }
    }
    let mut out = String::new();
    for exp in experiments {
        let _ = writeln!(out, "## {exp}\n");
        out.push_str(
            "| algo | pattern | r_rows | s_rows | payloads (r/s) | key/payload B | match | zipf | workers \
             | total ms | Mtuples/s | transform % | find % | materialize % | peak MiB | clust. S | clust. R |\n",
        );
        out.push_str("|---|---|---:|---:|---|---|---:|---:|---:|---:|---:|---:|---:|---:|---:|---:|---:|\n");
        for r in medians.iter().filter(|r| r.experiment == exp) {
            let t = phase_tenths([r.transform_ns, r.find_ns, r.materialize_ns]);
            let peak = r.peak_transform_b.max(r.peak_find_b).max(r.peak_materialize_b);
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {}/{} | {}/{} | {} | {} | {} | {:.3} | {:.2} | {} | {} | {} | {:.2} | {} | {} |",
                r.algo,
                r.pattern,
                r.r_rows,
                r.s_rows,
                r.r_payloads,
                r.s_payloads,
                r.key_bytes,
                r.payload_bytes,
                r.match_ratio,
                r.zipf,
                r.workers,
                r.total_ns as f64 / 1e6,
                r.throughput_tps / 1e6,
                pct(t[0]),
                pct(t[1]),
                pct(t[2]),
                peak as f64 / (1 << 20) as f64,
                opt(r.clusteredness_s),
                opt(r.clusteredness_r),
            );
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::read_csv;

    #[test]
    fn tenths_sum_exactly() {
        for parts in [[1, 1, 1], [2, 3, 7], [0, 0, 5], [999_999, 1, 1], [13, 17, 19]] {
            assert_eq!(phase_tenths(parts).iter().sum::<u64>(), 1000, "{parts:?}");
        }
        assert_eq!(phase_tenths([1, 1, 1]), [334, 333, 333]);
        assert_eq!(phase_tenths([0, 0, 0]), [0, 0, 0]);
    }

    #[test]
    fn empty_input_empty_report() {
        assert_eq!(markdown_report(&read_csv(&b""[..]).unwrap()), "");
    }

    #[test]
    fn single_row_percentages() {
        let csv = "experiment,algo,pattern,r_rows,s_rows,r_payloads,s_payloads,key_bytes,payload_bytes,match_ratio,zipf,workers,seed,rep,transform_ns,find_ns,materialize_ns,total_ns,throughput_tps,peak_transform_b,peak_find_b,peak_materialize_b,clusteredness_s,clusteredness_r\n\
                   join,PHJ,GFTR,10,10,1,1,4,4,1,0,1,0,0,1,1,1,3,1,0,0,0,,\n";
        let rows = read_csv(csv.as_bytes()).unwrap();
        let md = markdown_report(&rows);
        assert!(md.contains("| 33.4 | 33.3 | 33.3 |"), "{md}");
        assert_eq!(md.lines().filter(|l| l.starts_with("| PHJ")).count(), 1);
    }
}
