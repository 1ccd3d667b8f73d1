/// Gnuplot script that renders mean and variance of the density against the
/// reference, reading `stats.csv` and `reference.csv` from its own directory.
pub fn gnuplot_script(name: &str, region: (f64, f64)) -> String {
    format!(
        r#"# gnuplot plot.gp
set datafile separator ","
set key top right
set xlabel "x"
set terminal pngcairo size 1000,700

set output "mean_rho.png"
set title "{name}: E[rho]"
plot "stats.csv" using 1:2 skip 1 with lines lw 2 title "numeric", \
     "reference.csv" using 1:2 skip 1 with lines dt 2 lc rgb "red" title "exact"

set output "var_rho.png"
set title "{name}: Var[rho]"
plot "stats.csv" using 1:3 skip 1 with lines lw 2 title "numeric", \
     "reference.csv" using 1:3 skip 1 with lines dt 2 lc rgb "blue" title "exact"

set output "var_rho_shock.png"
set title "{name}: Var[rho] near the shock"
set xrange [{lo}:{hi}]
plot "stats.csv" using 1:3 skip 1 with linespoints title "numeric", \
     "reference.csv" using 1:3 skip 1 with lines dt 2 lc rgb "blue" title "exact"
"#,
        lo = region.0,
        hi = region.1
    )
}
