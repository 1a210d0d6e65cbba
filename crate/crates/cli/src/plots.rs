//! Short gnuplot scripts that render the emitted CSV files. Run them from the
//! output directory: `gnuplot energy.gp`.

pub fn energy_script() -> String {
    "\
set datafile separator ','
set terminal pngcairo size 900,600
set output 'energy.png'
set xlabel 'step'
set ylabel 'E_h - min E_h'
set logscale y
stats 'history.csv' using 2 nooutput
plot 'history.csv' using 1:($2 - STATS_min + 1e-16) skip 1 with lines title 'modified energy'
"
    .to_string()
}

pub fn state_script(dim: usize) -> String {
    let body = match dim {
        1 => "set xlabel 'x'\nplot 'state.csv' using 1:(sqrt($2**2 + $3**2)) skip 1 with lines title '|phi|'\n",
        2 => "set xlabel 'x'\nset ylabel 'y'\nset view map\nsplot 'state.csv' using 1:2:(sqrt($3**2 + $4**2)) skip 1 with points pointtype 5 pointsize 0.3 palette title '|phi|'\n",
        _ => "# 3D states: plot the z = 0 slice\nset view map\nsplot 'state.csv' using 1:2:($3 == 0 ? sqrt($4**2 + $5**2) : 1/0) skip 1 with points pointtype 5 pointsize 0.3 palette title '|phi|'\n",
    };
    format!("set datafile separator ','\nset terminal pngcairo size 900,600\nset output 'state.png'\n{body}")
}

pub fn study_script(expected_order: f64) -> String {
    format!(
        "\
set datafile separator ','
set terminal pngcairo size 900,600
set output 'study.png'
set logscale xy
set xlabel 'level value (tau or h)'
set ylabel 'successive difference'
set key left top
stats 'study.csv' using 2:3 skip 1 nooutput
x0 = STATS_max_x
y0 = STATS_max_y
plot 'study.csv' using 2:3 skip 1 with linespoints title 'l2', \\
     'study.csv' using 2:4 skip 1 with linespoints title 'linf', \\
     y0 * (x / x0)**{expected_order} with lines dashtype 2 title 'order {expected_order}'
"
    )
}
