use std::collections::BTreeMap;
use std::fmt::Write;

use crate::dsl::{Expr, StageDef};

use super::CodegenPlan;

/// One source array feeding one stage, as a shift-register window.
struct Window {
    source: String,
    /// Smallest linear offset read; index 0 of the window.
    min: i64,
    /// Cells held, including the packet being shifted in.
    cells: i64,
}

struct StageLayout<'a> {
    stage: &'a StageDef,
    index: usize,
    /// Cells between the newest input cell and the cell this stage emits;
    /// a whole number of packets.
    latency: i64,
    windows: Vec<Window>,
}

impl StageLayout<'_> {
    fn window(&self, source: &str) -> &Window {
        self.windows.iter().find(|w| w.source == source).expect("window for every source")
    }
}

fn layouts(plan: &CodegenPlan) -> Vec<StageLayout<'_>> {
    let cols = plan.params.cols as i64;
    let u = plan.params.unroll as i64;
    let iterated = &plan.program.inputs[plan.program.iterated_input()].name;
    let mut latency: BTreeMap<&str, i64> = BTreeMap::new();
    let mut out = Vec::new();
    for (index, stage) in plan.stages().into_iter().enumerate() {
        let mut lin: BTreeMap<&str, Vec<i64>> = BTreeMap::new();
        stage.expr.visit_accesses(&mut |name, off| lin.entry(name).or_default().push(off[0] * cols + off[1]));
        if plan.program.outputs.iter().any(|o| o.target == stage.target) {
            // Border cells pass the iterated input through unchanged.
            lin.entry(iterated.as_str()).or_default().push(0);
        }
        let need = lin
            .iter()
            .map(|(src, offs)| latency.get(src).copied().unwrap_or(0) + offs.iter().copied().max().unwrap_or(0).max(0))
            .max()
            .unwrap_or(0);
        let lat = (need + u - 1) / u * u;
        let windows = lin
            .iter()
            .map(|(src, offs)| {
                let min = offs.iter().copied().min().unwrap_or(0);
                Window { source: src.to_string(), min, cells: lat - latency.get(src).copied().unwrap_or(0) - min + u }
            })
            .collect();
        latency.insert(&stage.target, lat);
        out.push(StageLayout { stage, index, latency: lat, windows });
    }
    out
}

fn expr_text(e: &Expr, layout: &StageLayout, cols: i64, out: &mut String) {
    match e {
        Expr::Access { array, offset } => {
            let w = layout.window(array);
            let idx = offset[0] * cols + offset[1] - w.min;
            let _ = write!(out, "w_{array}[u + {idx}]");
        }
        Expr::Const { value } => {
            let _ = write!(out, "{:?}f", *value as f32);
        }
        Expr::Neg { operand } => {
            out.push_str("-(");
            expr_text(operand, layout, cols, out);
            out.push(')');
        }
        Expr::Binary { op, lhs, rhs } => {
            out.push('(');
            expr_text(lhs, layout, cols, out);
            let _ = write!(out, " {} ", op.symbol());
            expr_text(rhs, layout, cols, out);
            out.push(')');
        }
    }
}

/// Border test for one stage over the original (unflattened) indices.
fn interior_fn(plan: &CodegenPlan, target: &str, out: &mut String) {
    let reach = &plan.reach[target];
    let ext = &plan.extents;
    let _ = writeln!(out, "static bool interior_{target}(int row, int col) {{");
    let mut conds = vec![format!("row >= {} && row < {}", reach.lo[0], ext[0] - reach.hi[0])];
    if ext.len() > 1 {
        // Trailing indices, last dimension first, peeled off the flat column.
        let mut rest = "col".to_string();
        let mut idx = Vec::new();
        for d in (1..ext.len()).rev() {
            if d == 1 {
                idx.push((d, rest.clone()));
            } else {
                let _ = writeln!(out, "  const int i{d} = {rest} % {};", ext[d]);
                idx.push((d, format!("i{d}")));
                rest = format!("({rest} / {})", ext[d]);
            }
        }
        idx.reverse();
        for (d, name) in idx {
            conds.push(format!("{name} >= {} && {name} < {}", reach.lo[d], ext[d] - reach.hi[d]));
        }
    }
    let _ = writeln!(out, "  return {};", conds.join(" &&\n         "));
    out.push_str("}\n\n");
}

fn stage_fn(plan: &CodegenPlan, layout: &StageLayout, out: &mut String) {
    let cols = plan.params.cols as i64;
    let target = &layout.stage.target;
    let params: Vec<String> = layout.stage_sources().iter().map(|s| format!("const float* w_{s}")).collect();
    let _ = writeln!(out, "static float stage_{target}({}, int u) {{", params.join(", "));
    let mut body = String::new();
    expr_text(&layout.stage.expr, layout, cols, &mut body);
    let _ = writeln!(out, "  return {body};");
    out.push_str("}\n\n");
}

impl StageLayout<'_> {
    /// Sources the stage expression reads, in window order.
    fn stage_sources(&self) -> Vec<&str> {
        let mut read = Vec::new();
        self.stage.expr.visit_accesses(&mut |name, _| {
            if !read.contains(&name) {
                read.push(name);
            }
        });
        self.windows.iter().map(|w| w.source.as_str()).filter(|s| read.contains(s)).collect()
    }
}

fn pe_fn(plan: &CodegenPlan, layouts: &[StageLayout], out: &mut String) {
    let prog = &plan.program;
    let iterated = prog.iterated_input();
    let output = &prog.outputs[0].target;
    let fixed: Vec<&str> = prog.inputs.iter().enumerate().filter(|(i, _)| *i != iterated).map(|(_, a)| a.name.as_str()).collect();
    let mut sig: Vec<String> = prog.inputs.iter().map(|a| format!("tapa::istream<pkt_t>& {}", a.name)).collect();
    sig.extend(fixed.iter().map(|a| format!("tapa::ostream<pkt_t>& fwd_{a}")));
    sig.push(format!("tapa::ostream<pkt_t>& {output}"));
    sig.push("int row0".into());
    sig.push("int rows".into());
    let drain = layouts.last().map(|l| l.latency).unwrap_or(0) / plan.params.unroll as i64;

    out.push_str("// One temporal stage: kUnroll PUs fed one packet per cycle.\n");
    let _ = writeln!(out, "void PE({}) {{", sig.join(",\n        "));
    for l in layouts {
        for w in &l.windows {
            let _ = writeln!(out, "  float s{}_{}[{}];", l.index, w.source, w.cells);
            let _ = writeln!(out, "#pragma HLS array_partition variable=s{}_{} complete", l.index, w.source);
        }
    }
    let _ = writeln!(out, "  const int beats = rows * kCols / kUnroll;");
    let _ = writeln!(out, "  for (int beat = 0; beat < beats + {drain}; ++beat) {{");
    out.push_str("#pragma HLS pipeline II=1\n");
    for a in &prog.inputs {
        let _ = writeln!(out, "    const pkt_t p_{0} = beat < beats ? {0}.read() : pkt_t{{}};", a.name);
    }
    for a in &fixed {
        let _ = writeln!(out, "    if (beat < beats) fwd_{a}.write(p_{a});");
    }
    for l in layouts {
        let target = &l.stage.target;
        for w in &l.windows {
            let _ = writeln!(out, "    shift_in(s{0}_{1}, p_{1});", l.index, w.source);
        }
        let base = format!("beat * kUnroll - {}", l.latency);
        let _ = writeln!(out, "    pkt_t p_{target};");
        let _ = writeln!(out, "    for (int u = 0; u < kUnroll; ++u) {{");
        out.push_str("#pragma HLS unroll\n");
        let _ = writeln!(out, "      const int cell = {base} + u;");
        let _ = writeln!(out, "      const int row = row0 + cell / kCols, col = cell % kCols;");
        let args: Vec<String> = l.stage_sources().iter().map(|s| format!("s{}_{s}", l.index)).collect();
        let border = if target == output {
            let it = &prog.inputs[iterated].name;
            let w = l.window(it);
            format!("s{}_{it}[u + {}]", l.index, -w.min)
        } else {
            "0.0f".to_string()
        };
        let _ = writeln!(out, "      p_{target}[u] = interior_{target}(row, col) ? stage_{target}({}, u) : {border};", args.join(", "));
        out.push_str("    }\n");
    }
    let _ = writeln!(out, "    if (beat >= {drain}) {output}.write(p_{output});");
    out.push_str("  }\n}\n\n");
}

/// Stream carrying array `array` into stage `j` of group `g`.
fn stage_input(plan: &CodegenPlan, g: usize, j: usize, array: usize) -> String {
    let name = &plan.program.inputs[array].name;
    match (j, array == plan.program.iterated_input()) {
        (0, _) => format!("load_g{g}_{name}"),
        (_, true) => format!("cascade_g{g}_s{j}"),
        (_, false) => format!("fwd_g{g}_s{j}_{name}"),
    }
}

fn top_fn(plan: &CodegenPlan, out: &mut String) {
    let prog = &plan.program;
    let (k, s) = (plan.config.k as usize, plan.config.s as usize);
    let iterated = prog.iterated_input();
    let arrays = plan.arrays();
    let border = plan.is_border_streaming();
    let load = if border { "LoadX" } else { "Load" };
    let store = if border { "StoreX" } else { "Store" };

    let banks: Vec<String> = plan.bank_assignment.iter().flat_map(|g| g.banks.iter()).map(|b| format!("tapa::mmap<pkt_t> bank_{b}")).collect();
    let _ = writeln!(out, "void {}({}) {{", plan.top_name(), banks.join(",\n    "));
    for g in 0..k {
        let banks = &plan.bank_assignment[g].banks;
        let placed: Vec<String> = arrays.iter().zip(banks).map(|(a, b)| format!("{a} -> bank_{b}")).collect();
        let _ = writeln!(out, "  // group {g}: {}", placed.join(", "));
        for a in &prog.inputs {
            let _ = writeln!(out, "  tapa::stream<pkt_t, 2> load_g{g}_{0}(\"load_g{g}_{0}\");", a.name);
        }
        for j in 1..s {
            let _ = writeln!(out, "  tapa::stream<pkt_t, 2> cascade_g{g}_s{j}(\"cascade_g{g}_s{j}\");");
        }
        for (i, a) in prog.inputs.iter().enumerate() {
            if i != iterated {
                for j in 1..=s {
                    let _ = writeln!(out, "  tapa::stream<pkt_t, 2> fwd_g{g}_s{j}_{0}(\"fwd_g{g}_s{j}_{0}\");", a.name);
                }
            }
        }
        let _ = writeln!(out, "  tapa::stream<pkt_t, 2> result_g{g}(\"result_g{g}\");");
    }
    if border {
        out.push_str("  // [0] carries rows downward, [1] upward.\n");
        for g in 0..k - 1 {
            let _ = writeln!(out, "  tapa::streams<pkt_t, 2, kBorderBeats> border_{g}_{}(\"border_{g}_{}\");", g + 1, g + 1);
        }
        out.push_str("  tapa::streams<pkt_t, 2, 2> idle_top(\"idle_top\");\n");
        out.push_str("  tapa::streams<pkt_t, 2, 2> idle_bottom(\"idle_bottom\");\n");
    }
    out.push_str("\n  tapa::task()\n");
    for g in 0..k {
        let banks = &plan.bank_assignment[g].banks;
        let span = format!("kRow0[{g}], kRowCount[{g}]");
        for (i, a) in prog.inputs.iter().enumerate() {
            let from = if border && i == iterated {
                let above = if g == 0 { "idle_top[0]".to_string() } else { format!("border_{}_{g}[0]", g - 1) };
                let below = if g + 1 == k { "idle_bottom[1]".to_string() } else { format!("border_{g}_{}[1]", g + 1) };
                format!(", {above}, {below}")
            } else {
                String::new()
            };
            let f = if i == iterated { load } else { "Load" };
            let _ = writeln!(out, "      .invoke({f}, bank_{}, load_g{g}_{}{from}, kRowCount[{g}])", banks[i], a.name);
        }
        for j in 0..s {
            let mut args: Vec<String> = (0..prog.inputs.len()).map(|i| stage_input(plan, g, j, i)).collect();
            for (i, a) in prog.inputs.iter().enumerate() {
                if i != iterated {
                    args.push(format!("fwd_g{g}_s{}_{}", j + 1, a.name));
                }
            }
            args.push(if j + 1 == s { format!("result_g{g}") } else { format!("cascade_g{g}_s{}", j + 1) });
            let _ = writeln!(out, "      .invoke(PE, {}, {span})", args.join(", "));
        }
        for (i, a) in prog.inputs.iter().enumerate() {
            if i != iterated {
                let _ = writeln!(out, "      .invoke<tapa::detach>(Sink, fwd_g{g}_s{s}_{})", a.name);
            }
        }
        let to = if border {
            let above = if g == 0 { "idle_top[1]".to_string() } else { format!("border_{}_{g}[1]", g - 1) };
            let below = if g + 1 == k { "idle_bottom[0]".to_string() } else { format!("border_{g}_{}[0]", g + 1) };
            format!(", {above}, {below}")
        } else {
            String::new()
        };
        let _ = writeln!(out, "      .invoke({store}, result_g{g}, bank_{}{to}, kRowCount[{g}])", banks[prog.inputs.len()]);
    }
    out.push_str("      ;\n}\n");
}

fn helpers(plan: &CodegenPlan, out: &mut String) {
    out.push_str(
        "template <int N>\nstatic void shift_in(float (&w)[N], const pkt_t& p) {\n\
         #pragma HLS inline\n  for (int i = 0; i + kUnroll < N; ++i) w[i] = w[i + kUnroll];\n  \
         for (int u = 0; u < kUnroll; ++u) w[N - kUnroll + u] = p[u];\n}\n\n",
    );
    out.push_str(
        "void Load(tapa::mmap<pkt_t> src, tapa::ostream<pkt_t>& out, int rows) {\n  \
         for (int i = 0; i < rows * kCols / kUnroll; ++i) out.write(src[i]);\n}\n\n",
    );
    out.push_str(
        "void Store(tapa::istream<pkt_t>& in, tapa::mmap<pkt_t> dst, int rows) {\n  \
         for (int i = 0; i < rows * kCols / kUnroll; ++i) dst[i] = in.read();\n}\n\n",
    );
    if plan.is_border_streaming() {
        out.push_str(
            "// Halo rows from the neighbours overwrite the stale copy before streaming.\n\
             void LoadX(tapa::mmap<pkt_t> src, tapa::ostream<pkt_t>& out, tapa::istream<pkt_t>& from_above,\n           \
             tapa::istream<pkt_t>& from_below, int rows) {\n  \
             for (int i = 0; i < kBorderBeats && !from_above.eos(); ++i) src[i] = from_above.read();\n  \
             for (int i = 0; i < kBorderBeats && !from_below.eos(); ++i)\n    \
             src[rows * kCols / kUnroll - kBorderBeats + i] = from_below.read();\n  \
             Load(src, out, rows);\n}\n\n",
        );
        out.push_str(
            "// Edge rows of the owned block go to the neighbours for the next pass.\n\
             void StoreX(tapa::istream<pkt_t>& in, tapa::mmap<pkt_t> dst, tapa::ostream<pkt_t>& to_above,\n            \
             tapa::ostream<pkt_t>& to_below, int rows) {\n  \
             const int beats = rows * kCols / kUnroll;\n  \
             for (int i = 0; i < beats; ++i) {\n    \
             const pkt_t p = in.read();\n    \
             dst[i] = p;\n    \
             if (i >= kBorderBeats && i < 2 * kBorderBeats) to_above.write(p);\n    \
             if (i >= beats - 2 * kBorderBeats && i < beats - kBorderBeats) to_below.write(p);\n  \
             }\n  to_above.close();\n  to_below.close();\n}\n\n",
        );
    }
    if plan.program.inputs.len() > 1 {
        out.push_str("void Sink(tapa::istream<pkt_t>& in) {\n  for (;;) in.read();\n}\n\n");
    }
}

/// Accelerator source: one PE function plus the task graph wiring `k`
/// groups of `s` chained PEs to their memory banks.
pub fn emit_kernel(plan: &CodegenPlan) -> String {
    let p = &plan.params;
    let cfg = &plan.config;
    let halo_rows = plan.partitions.first().map(|q| q.halo_lo.max(q.halo_hi)).unwrap_or(0);
    let border_rows = match cfg.variant {
        crate::model::Variant::SpatialS => p.radius,
        _ => p.radius * (cfg.s as usize).min(p.iterations as usize),
    };
    let layouts = layouts(plan);
    let mut out = String::new();
    let _ = writeln!(out, "// {} accelerator: {cfg}, {} PEs on {} banks.", plan.program.kernel_name, cfg.total_pes, cfg.hbm_banks_used);
    out.push_str("// Generated HLS C++ in the TAPA dialect. Not guaranteed to synthesize.\n");
    out.push_str("#include <tapa.h>\n\n");
    let _ = writeln!(out, "constexpr int kRows = {};", p.rows);
    let _ = writeln!(out, "constexpr int kCols = {};", p.cols);
    let _ = writeln!(out, "constexpr int kUnroll = {};", p.unroll);
    let _ = writeln!(out, "constexpr int kRadius = {};", p.radius);
    let _ = writeln!(out, "constexpr int kHaloRows = {halo_rows};");
    if plan.is_border_streaming() {
        let _ = writeln!(out, "constexpr int kBorderBeats = {};", border_rows * p.cols / p.unroll);
    }
    let row0: Vec<String> = plan.partitions.iter().map(|q| q.resident().start.to_string()).collect();
    let count: Vec<String> = plan.partitions.iter().map(|q| q.resident().len().to_string()).collect();
    let _ = writeln!(out, "// Resident rows of each group, halo included.");
    let _ = writeln!(out, "constexpr int kRow0[{}] = {{{}}};", row0.len(), row0.join(", "));
    let _ = writeln!(out, "constexpr int kRowCount[{}] = {{{}}};", count.len(), count.join(", "));
    let _ = writeln!(out, "using pkt_t = tapa::vec_t<float, kUnroll>;\n");
    out.push_str("// Reuse windows in cells, per stage and source:\n");
    for l in &layouts {
        for w in &l.windows {
            let _ = writeln!(out, "//   {} <- {}: {} cells", l.stage.target, w.source, w.cells);
        }
    }
    out.push('\n');
    helpers(plan, &mut out);
    for l in &layouts {
        interior_fn(plan, &l.stage.target, &mut out);
        stage_fn(plan, l, &mut out);
    }
    pe_fn(plan, &layouts, &mut out);
    top_fn(plan, &mut out);
    out
}
