//! Self-contained SVG figures. Every curve carries its data-space vertices in
//! a `data-xy` attribute and every heat cell its value in `data-value`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::copula::CopulaModel;
use crate::error::{Error, Result};
use crate::gof::empirical_copula;
use crate::ml::roc_curve;
use crate::pipeline::ReportBundle;
use crate::survival::{KmCurve, Stratum};

const W: f64 = 640.0;
const H: f64 = 480.0;
const MARGIN: (f64, f64, f64, f64) = (60.0, 20.0, 40.0, 50.0); // left, right, top, bottom

pub const HEAT_GRID: usize = 50;

const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Linear map from a data rectangle to a pixel rectangle (y flipped).
#[derive(Debug, Clone, Copy)]
struct Frame {
    x: (f64, f64),
    y: (f64, f64),
    px: (f64, f64),
    py: (f64, f64),
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64), px: (f64, f64), py: (f64, f64)) -> Self {
        Self { x, y, px, py }
    }

    fn full(x: (f64, f64), y: (f64, f64)) -> Self {
        Self::new(x, y, (MARGIN.0, W - MARGIN.1), (MARGIN.2, H - MARGIN.3))
    }

    fn sx(&self, x: f64) -> f64 {
        let span = (self.x.1 - self.x.0).max(f64::MIN_POSITIVE);
        self.px.0 + (x - self.x.0) / span * (self.px.1 - self.px.0)
    }

    fn sy(&self, y: f64) -> f64 {
        let span = (self.y.1 - self.y.0).max(f64::MIN_POSITIVE);
        self.py.1 - (y - self.y.0) / span * (self.py.1 - self.py.0)
    }
}

struct Svg {
    body: String,
}

impl Svg {
    fn new(title: &str) -> Self {
        let mut body = String::new();
        let _ = write!(
            body,
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
             <svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"11\">\n\
             <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
             <text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
            W / 2.0,
            esc(title)
        );
        Self { body }
    }

    fn raw(&mut self, s: &str) {
        self.body.push_str(s);
        self.body.push('\n');
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, s: &str) {
        let _ = writeln!(
            self.body,
            "<text x=\"{x:.2}\" y=\"{y:.2}\" text-anchor=\"{anchor}\">{}</text>",
            esc(s)
        );
    }

    fn line(&mut self, f: &Frame, a: (f64, f64), b: (f64, f64), style: &str) {
        let _ = writeln!(
            self.body,
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" {style}/>",
            f.sx(a.0),
            f.sy(a.1),
            f.sx(b.0),
            f.sy(b.1)
        );
    }

    fn polyline(&mut self, f: &Frame, pts: &[(f64, f64)], class: &str, label: &str, color: &str) {
        let px: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", f.sx(x), f.sy(y)))
            .collect();
        let data: Vec<String> = pts.iter().map(|&(x, y)| format!("{x},{y}")).collect();
        let _ = writeln!(
            self.body,
            "<polyline class=\"{class}\" data-label=\"{}\" data-xy=\"{}\" points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
            esc(label),
            data.join(" "),
            px.join(" ")
        );
    }

    fn axes(&mut self, f: &Frame, xlabel: &str, ylabel: &str) {
        let ticks = |lo: f64, hi: f64| -> Vec<f64> { (0..=5).map(|i| lo + (hi - lo) * i as f64 / 5.0).collect() };
        self.line(f, (f.x.0, f.y.0), (f.x.1, f.y.0), "stroke=\"black\"");
        self.line(f, (f.x.0, f.y.0), (f.x.0, f.y.1), "stroke=\"black\"");
        for t in ticks(f.x.0, f.x.1) {
            self.text(f.sx(t), f.py.1 + 14.0, "middle", &tick_label(t));
        }
        for t in ticks(f.y.0, f.y.1) {
            self.text(f.px.0 - 6.0, f.sy(t) + 4.0, "end", &tick_label(t));
        }
        self.text((f.px.0 + f.px.1) / 2.0, f.py.1 + 32.0, "middle", xlabel);
        let _ = writeln!(
            self.body,
            "<text x=\"14\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {:.2})\">{}</text>",
            (f.py.0 + f.py.1) / 2.0,
            (f.py.0 + f.py.1) / 2.0,
            esc(ylabel)
        );
    }

    fn legend(&mut self, entries: &[(String, &str)]) {
        for (i, (label, color)) in entries.iter().enumerate() {
            let y = MARGIN.2 + 14.0 + 16.0 * i as f64;
            let x = W - MARGIN.1 - 170.0;
            let _ = writeln!(
                self.body,
                "<rect x=\"{x:.2}\" y=\"{:.2}\" width=\"10\" height=\"10\" fill=\"{color}\"/>",
                y - 9.0
            );
            self.text(x + 14.0, y, "start", label);
        }
    }

    fn finish(mut self) -> String {
        self.body.push_str("</svg>\n");
        self.body
    }
}

fn tick_label(t: f64) -> String {
    if t.abs() >= 10.0 || t == t.round() {
        format!("{t:.0}")
    } else {
        format!("{t:.1}")
    }
}

pub fn roc_svg(curves: &[(String, Vec<(f64, f64)>)]) -> String {
    let mut svg = Svg::new("ROC curves, out-of-fold scores");
    let f = Frame::full((0.0, 1.0), (0.0, 1.0));
    svg.axes(&f, "False positive rate", "True positive rate");
    svg.polyline(&f, &[(0.0, 0.0), (1.0, 1.0)], "diagonal", "chance", "#999999");
    let mut legend = Vec::new();
    for (i, (label, pts)) in curves.iter().enumerate() {
        let c = PALETTE[i % PALETTE.len()];
        svg.polyline(&f, pts, "roc", label, c);
        legend.push((label.clone(), c));
    }
    svg.legend(&legend);
    svg.finish()
}

pub fn histogram(x: &[f64], bins: usize) -> Vec<usize> {
    let mut counts = vec![0; bins];
    for &v in x {
        let b = ((v * bins as f64).floor() as isize).clamp(0, bins as isize - 1) as usize;
        counts[b] += 1;
    }
    counts
}

pub fn score_hist_svg(series: &[(String, &[f64])]) -> String {
    const BINS: usize = 20;
    let mut svg = Svg::new("Distribution of risk scores");
    let counts: Vec<Vec<usize>> = series.iter().map(|(_, x)| histogram(x, BINS)).collect();
    let top = counts.iter().flatten().copied().max().unwrap_or(1).max(1) as f64;
    let f = Frame::full((0.0, 1.0), (0.0, top));
    svg.axes(&f, "Predicted probability", "Count");
    let mut legend = Vec::new();
    for (s, ((label, _), c)) in series.iter().zip(&counts).enumerate() {
        let color = PALETTE[s % PALETTE.len()];
        for (b, &n) in c.iter().enumerate() {
            let x0 = b as f64 / BINS as f64;
            let x1 = (b + 1) as f64 / BINS as f64;
            let _ = writeln!(
                svg.body,
                "<rect class=\"bin\" data-series=\"{}\" data-bin=\"{b}\" data-count=\"{n}\" x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{color}\" fill-opacity=\"0.45\"/>",
                esc(label),
                f.sx(x0),
                f.sy(n as f64),
                f.sx(x1) - f.sx(x0),
                f.sy(0.0) - f.sy(n as f64)
            );
        }
        legend.push((label.clone(), color));
    }
    svg.legend(&legend);
    svg.finish()
}

pub fn score_scatter_svg(p_clin: &[f64], p_gen: &[f64], y: &[u8]) -> String {
    let mut svg = Svg::new("Clinical vs genomic risk score");
    let f = Frame::full((0.0, 1.0), (0.0, 1.0));
    svg.axes(&f, "Clinical score", "Genomic score");
    for ((&a, &b), &l) in p_clin.iter().zip(p_gen).zip(y) {
        let color = if l == 1 { PALETTE[1] } else { PALETTE[0] };
        let _ = writeln!(
            svg.body,
            "<circle data-y=\"{l}\" cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.2\" fill=\"{color}\" fill-opacity=\"0.6\"/>",
            f.sx(a),
            f.sy(b)
        );
    }
    svg.legend(&[("event within horizon".into(), PALETTE[1]), ("no event".into(), PALETTE[0])]);
    svg.finish()
}

fn heat_color(v: f64) -> String {
    let t = v.clamp(0.0, 1.0);
    let r = (255.0 * t).round() as u8;
    let b = (255.0 * (1.0 - t)).round() as u8;
    format!("#{r:02x}40{b:02x}")
}

/// Values on the lattice `(i/g, j/g)`, `i, j = 1..=g`, row-major in `i`.
pub fn lattice(g: usize, f: impl Fn(f64, f64) -> f64) -> Vec<Vec<f64>> {
    (1..=g)
        .map(|i| (1..=g).map(|j| f(i as f64 / g as f64, j as f64 / g as f64)).collect())
        .collect()
}

pub fn copula_heat_svg(empirical: &[Vec<f64>], fitted: &[Vec<f64>], fitted_label: &str) -> String {
    let mut svg = Svg::new("Empirical vs fitted copula on the unit lattice");
    let g = empirical.len();
    let panel_w = (W - MARGIN.0 - MARGIN.1 - 40.0) / 2.0;
    for (k, (grid, label)) in [(empirical, "empirical"), (fitted, fitted_label)].into_iter().enumerate() {
        let x0 = MARGIN.0 + k as f64 * (panel_w + 40.0);
        let f = Frame::new((0.0, 1.0), (0.0, 1.0), (x0, x0 + panel_w), (MARGIN.2 + 20.0, MARGIN.2 + 20.0 + panel_w));
        svg.text(x0 + panel_w / 2.0, MARGIN.2 + 12.0, "middle", label);
        let _ = writeln!(svg.body, "<g class=\"heat\" data-panel=\"{}\">", esc(label));
        for (i, row) in grid.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                let (u0, u1) = (i as f64 / g as f64, (i + 1) as f64 / g as f64);
                let (v0, v1) = (j as f64 / g as f64, (j + 1) as f64 / g as f64);
                let _ = writeln!(
                    svg.body,
                    "<rect data-i=\"{}\" data-j=\"{}\" data-value=\"{v}\" x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
                    i + 1,
                    j + 1,
                    f.sx(u0),
                    f.sy(v1),
                    f.sx(u1) - f.sx(u0),
                    f.sy(v0) - f.sy(v1),
                    heat_color(v)
                );
            }
        }
        svg.raw("</g>");
        svg.axes(&f, "u", "v");
    }
    svg.finish()
}

/// Level set `C(u, v) = level` traced by bisection in `v` for each `u`.
pub fn cdf_contour(model: &CopulaModel, level: f64, steps: usize) -> Vec<(f64, f64)> {
    let mut pts = Vec::new();
    for s in 0..=steps {
        let u = level + (1.0 - level) * s as f64 / steps as f64;
        let (mut lo, mut hi) = (level.min(1.0), 1.0);
        if model.cdf(u, hi) < level {
            continue;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if model.cdf(u, mid) < level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        pts.push((u, hi));
    }
    pts
}

pub fn copula_contours_svg(model: &CopulaModel, u: &[f64], v: &[f64]) -> String {
    let mut svg = Svg::new(&format!(
        "Fitted {} copula CDF contours over pseudo-observations",
        model.family
    ));
    let f = Frame::full((0.0, 1.0), (0.0, 1.0));
    svg.axes(&f, "u (clinical)", "v (genomic)");
    for (&a, &b) in u.iter().zip(v) {
        let _ = writeln!(
            svg.body,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"1.8\" fill=\"#555555\" fill-opacity=\"0.4\"/>",
            f.sx(a),
            f.sy(b)
        );
    }
    for k in 1..=9 {
        let level = k as f64 / 10.0;
        let pts = cdf_contour(model, level, 80);
        svg.polyline(&f, &pts, "contour", &format!("C = {level:.1}"), PALETTE[0]);
    }
    svg.finish()
}

/// Right-continuous step vertices: flat to each event time, then drop.
pub fn km_steps(curve: &KmCurve, t_end: f64) -> Vec<(f64, f64)> {
    let mut pts = vec![(0.0, 1.0)];
    let mut s = 1.0;
    for step in &curve.steps {
        pts.push((step.t, s));
        pts.push((step.t, step.s_hat));
        s = step.s_hat;
    }
    let last = curve.steps.last().map_or(0.0, |st| st.t);
    pts.push((t_end.max(last), s));
    pts
}

pub fn km_svg(curves: &[(Stratum, KmCurve)], t_end: f64) -> String {
    let mut svg = Svg::new("Kaplan–Meier survival by joint risk stratum");
    let f = Frame::full((0.0, t_end.max(1.0)), (0.0, 1.0));
    svg.axes(&f, "Months", "Survival probability");
    let mut legend = Vec::new();
    for (s, c) in curves {
        let color = PALETTE[Stratum::ALL.iter().position(|x| x == s).unwrap_or(0)];
        svg.polyline(&f, &km_steps(c, t_end), "km", s.as_str(), color);
        legend.push((format!("{s} (n={})", c.n_start), color));
    }
    svg.legend(&legend);
    svg.finish()
}

fn write(dir: &Path, name: &str, text: String, out: &mut Vec<PathBuf>) -> Result<()> {
    let p = dir.join(name);
    fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
    out.push(p);
    Ok(())
}

/// Render every figure the bundle has data for.
pub fn render_plots(bundle: &ReportBundle, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    let (Some(cohort), Some(scores)) = (&bundle.cohort, &bundle.scores) else {
        return Ok(out);
    };
    let curves = vec![
        (format!("clinical ({})", scores.clinical_model), roc_curve(&scores.p_clin, &cohort.y)?),
        (format!("genomic ({})", scores.genomic_model), roc_curve(&scores.p_gen, &cohort.y)?),
    ];
    write(dir, "roc.svg", roc_svg(&curves), &mut out)?;
    write(
        dir,
        "score_hist.svg",
        score_hist_svg(&[("clinical".into(), &scores.p_clin), ("genomic".into(), &scores.p_gen)]),
        &mut out,
    )?;
    write(dir, "score_scatter.svg", score_scatter_svg(&scores.p_clin, &scores.p_gen, &cohort.y), &mut out)?;

    if let (Some(cop), Some(gof)) = (&bundle.copula, &bundle.gof) {
        let model = cop
            .fits
            .iter()
            .find(|f| f.model.family == gof.best)
            .map(|f| f.model)
            .ok_or_else(|| Error::InvalidInput("selected copula has no fit".into()))?;
        let emp = lattice(HEAT_GRID, |a, b| empirical_copula(&cop.sample, a, b));
        let fit = lattice(HEAT_GRID, |a, b| model.cdf(a, b));
        write(dir, "copula_heat.svg", copula_heat_svg(&emp, &fit, &format!("fitted {}", model.family)), &mut out)?;
        write(dir, "copula_contours.svg", copula_contours_svg(&model, &cop.sample.u, &cop.sample.v), &mut out)?;
    }
    if let Some(strata) = &bundle.strata {
        let t_end = cohort.time.iter().copied().fold(0.0, f64::max);
        write(dir, "km.svg", km_svg(&strata.curves.curves, t_end), &mut out)?;
    }
    Ok(out)
}
