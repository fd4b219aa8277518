use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use hbm_stencil::analysis::{computation_intensity, derive_params, output_reach};
use hbm_stencil::codegen::{emit_host, emit_kernel, CodegenError, CodegenPlan};
use hbm_stencil::corpus;
use hbm_stencil::dsl::{parse, DslError, StencilProgram};
use hbm_stencil::flow::{explore, first_buildable, sim_check, ExploreOptions, Exploration, FlowError, SimCheck};
use hbm_stencil::model::{Candidate, ModelError, ParallelismConfig, PlatformSpec, Variant};
use hbm_stencil::report::{DesignReport, SCHEMA_VERSION};
use hbm_stencil::sim::{oracle, random_inputs, Grid, SimError, SimResult, Simulator};
use serde_json::json;

use crate::{BudgetArgs, Cli, Command, DesignArgs, KernelArgs};

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_PARSE: u8 = 2;
pub const EXIT_INFEASIBLE: u8 = 3;
pub const EXIT_MISMATCH: u8 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn new(code: u8, message: impl Into<String>) -> Self {
        CliError { code, message: message.into() }
    }
}

impl From<FlowError> for CliError {
    fn from(e: FlowError) -> Self {
        let code = match &e {
            FlowError::Dsl(_) | FlowError::Analysis(_) => EXIT_PARSE,
            FlowError::Model(ModelError::InvalidPlatform(_)) => EXIT_PARSE,
            FlowError::Model(_) | FlowError::Codegen(_) => EXIT_INFEASIBLE,
            FlowError::Sim(SimError::InvalidPartition { .. }) => EXIT_INFEASIBLE,
            FlowError::Sim(SimError::Grid(_)) => EXIT_USAGE,
            FlowError::Sim(_) => EXIT_INFEASIBLE,
        };
        CliError::new(code, e.to_string())
    }
}

impl From<DslError> for CliError {
    fn from(e: DslError) -> Self {
        FlowError::from(e).into()
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        FlowError::from(e).into()
    }
}

impl From<CodegenError> for CliError {
    fn from(e: CodegenError) -> Self {
        FlowError::from(e).into()
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub fn run(cli: Cli) -> Result<()> {
    let platform = load_platform(cli.platform.as_deref())?;
    match cli.command {
        Command::Parse { kernel } => cmd_parse(&kernel, &platform),
        Command::Explore { kernel, budget, json, out, seed } => cmd_explore(&kernel, &budget, &platform, json, out.as_deref(), seed),
        Command::Simulate { kernel, budget, design, grid, seed, all_variants, trace } => {
            cmd_simulate(&kernel, &budget, &design, &platform, &grid, seed, all_variants, trace)
        }
        Command::Generate { kernel, budget, design, out, seed, fallback_on_reject } => {
            cmd_generate(&kernel, &budget, &design, &platform, &out, seed, fallback_on_reject)
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::new(EXIT_USAGE, format!("{}: {e}", path.display())))
}

fn load_platform(path: Option<&Path>) -> Result<PlatformSpec> {
    let text = match path {
        Some(p) => read(p)?,
        None => corpus::U280_LIKE.to_string(),
    };
    PlatformSpec::from_toml(&text).map_err(|e| FlowError::from(e).into())
}

/// A path wins over a bundled kernel of the same name.
fn load_program(args: &KernelArgs) -> Result<StencilProgram> {
    let path = Path::new(&args.dsl);
    let source = if path.exists() {
        read(path)?
    } else if let Some(src) = corpus::source(&args.dsl) {
        src.to_string()
    } else {
        return Err(CliError::new(EXIT_USAGE, format!("{}: no such file or bundled kernel", args.dsl)));
    };
    let program = parse(&source).map_err(|e| match e {
        DslError::Syntax { line, col, message } => CliError::new(EXIT_PARSE, format!("{}:{line}:{col}: {message}", args.dsl)),
        other => other.into(),
    })?;
    Ok(match args.iterations {
        Some(n) => program.with_iterations(n),
        None => program,
    })
}

fn options(budget: &BudgetArgs) -> ExploreOptions {
    ExploreOptions { iterations: None, max_pe: budget.max_pe, fallback_steps: budget.fallback }
}

fn cmd_parse(args: &KernelArgs, platform: &PlatformSpec) -> Result<()> {
    let program = load_program(args)?;
    let platform = platform.for_kernel(&program.kernel_name);
    let mut doc = json!({
        "schema_version": SCHEMA_VERSION,
        "program": program,
        "output_reach": output_reach(&program),
    });
    match derive_params(&program, &platform) {
        Ok(params) => {
            let ci = computation_intensity(&params);
            doc["radius"] = json!(params.radius);
            doc["computation_intensity"] = json!(format!("{}/{}", ci.numer(), ci.denom()));
            doc["params"] = json!(params);
        }
        Err(e) => doc["params_error"] = json!(e.to_string()),
    }
    println!("{}", serde_json::to_string_pretty(&doc).expect("json"));
    Ok(())
}

fn table(report: &DesignReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{} on {} (iter {}), Max#PE {}", report.kernel, report.platform, report.params.iterations, report.budget.max_pe);
    let _ = writeln!(s, "{:>4}  {:<10} {:>3} {:>3} {:>4} {:>5} {:>14} {:>7} {:>10}", "rank", "variant", "k", "s", "PEs", "banks", "cycles", "rounds", "GCell/s");
    for c in &report.candidates {
        let flags = if c.flags.is_empty() { String::new() } else { format!("  {:?}", c.flags) };
        let _ = writeln!(
            s,
            "{:>4}  {:<10} {:>3} {:>3} {:>4} {:>5} {:>14} {:>7} {:>10.3}{flags}",
            c.rank,
            c.variant.name(),
            c.k,
            c.s,
            c.total_pes,
            c.hbm_banks_used,
            c.cycles,
            c.rounds,
            c.gcells_per_s
        );
    }
    let _ = writeln!(s, "winner: {}", report.rationale);
    for a in &report.fallback_attempts {
        let _ = writeln!(s, "fallback at Max#PE {}: {}", a.max_pe, a.outcome);
    }
    s
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| CliError::new(EXIT_USAGE, format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| CliError::new(EXIT_USAGE, format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn cmd_explore(args: &KernelArgs, budget: &BudgetArgs, platform: &PlatformSpec, json: bool, out: Option<&Path>, seed: u64) -> Result<()> {
    let program = load_program(args)?;
    let expl = explore(&program, platform, &options(budget))?;
    let report = DesignReport::new(&expl, None, Some(seed));
    if json {
        print!("{}", report.to_json());
    } else {
        print!("{}", table(&report));
    }
    if let Some(dir) = out {
        let path = write_file(dir, &format!("{}.explore.json", program.kernel_name.to_lowercase()), &report.to_json())?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn override_candidate(expl: &Exploration, design: &DesignArgs) -> Option<Result<Candidate>> {
    let variant = design.variant?;
    let config = ParallelismConfig::new(variant, design.k, design.s, expl.budget.banks_per_pe);
    if let Err(e) = config.check_shape() {
        return Some(Err(FlowError::from(e).into()));
    }
    if config.total_pes > expl.budget.max_pe {
        eprintln!("warning: {config} uses {} PEs, over the budget of {}", config.total_pes, expl.budget.max_pe);
    }
    let estimate = config.estimate(&expl.params);
    Some(Ok(Candidate { config, estimate }))
}

fn parse_grid_spec(spec: &str) -> Result<Option<Vec<usize>>> {
    let Some(dims) = spec.strip_prefix("random:") else { return Ok(None) };
    let extents: std::result::Result<Vec<usize>, _> = dims.split('x').map(str::parse).collect();
    match extents {
        Ok(e) if !e.is_empty() && e.iter().all(|&n| n > 0) => Ok(Some(e)),
        _ => Err(CliError::new(EXIT_USAGE, format!("bad grid spec `{spec}`; expected random:RxC or random:RxCxD"))),
    }
}

fn load_grids(program: &StencilProgram, specs: &[String], seed: u64) -> Result<Vec<Grid>> {
    if let [only] = specs {
        if let Some(extents) = parse_grid_spec(only)? {
            if extents.len() != program.dims() {
                return Err(CliError::new(EXIT_USAGE, format!("{} is {}-D, grid spec `{only}` is {}-D", program.kernel_name, program.dims(), extents.len())));
            }
            return Ok(random_inputs(program, &extents, seed)?);
        }
    }
    if specs.len() != program.inputs.len() {
        return Err(CliError::new(EXIT_USAGE, format!("{} has {} inputs; give one --grid file per input", program.kernel_name, program.inputs.len())));
    }
    let extents = program.extents().to_vec();
    specs
        .iter()
        .map(|spec| {
            let path = Path::new(spec);
            if spec.ends_with(".csv") {
                let hint = if extents.len() > 2 { Some(extents.as_slice()) } else { None };
                Ok(Grid::from_csv(&read(path)?, hint)?)
            } else {
                let f = fs::File::open(path).map_err(|e| CliError::new(EXIT_USAGE, format!("{spec}: {e}")))?;
                Ok(Grid::read_binary(std::io::BufReader::new(f))?)
            }
        })
        .collect()
}

fn print_check(c: &SimCheck) {
    let verdict = if c.bit_identical { "MATCH".to_string() } else { format!("MISMATCH ({} cells)", c.mismatched_cells) };
    println!("  oracle    {verdict}");
    println!("  measured  {} cycles", c.measured_cycles);
    println!("  model     {} cycles", c.model_cycles);
    println!("  error     {:+.2}%", 100.0 * c.relative_error);
}

fn print_trace(r: &SimResult) {
    for t in &r.trace {
        println!("  round {:>3}: {} stages, rows per group {:?}, {} cycles", t.round, t.stages, t.pe_rows, t.cycles);
    }
    if r.halo_exchanged_rows > 0 {
        println!("  halo rows exchanged: {}", r.halo_exchanged_rows);
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    args: &KernelArgs,
    budget: &BudgetArgs,
    design: &DesignArgs,
    platform: &PlatformSpec,
    grid: &[String],
    seed: u64,
    all_variants: bool,
    trace: bool,
) -> Result<()> {
    let program = load_program(args)?;
    let inputs = load_grids(&program, grid, seed)?;
    let program = program.with_extents(inputs[0].extents());
    let extents: Vec<String> = inputs[0].extents().iter().map(|e| e.to_string()).collect();
    let expl = explore(&program, platform, &options(budget))?;
    let params = expl.params.clone();
    let expected = oracle(&program, &inputs)?;
    let sim = Simulator::new(&program, &inputs, params.unroll)?;

    println!("{} on {} grid, iter {}, seed {seed}", program.kernel_name, extents.join("x"), params.iterations);
    if all_variants {
        let clock = expl.platform.clock_hz;
        println!("{:<10} {:>3} {:>3} {:<9} {:>12} {:>12} {:>8} {:>10}", "variant", "k", "s", "verdict", "measured", "model", "error", "GCell/s");
        let mut mismatch = false;
        for variant in Variant::ALL {
            let best = expl.selection.ranked.iter().find(|c| c.config.variant == variant && hbm_stencil::flow::buildable(&params, c).is_ok());
            let Some(c) = best else {
                println!("{:<10} {:>3} {:>3} {:<9}", variant.name(), "-", "-", "none");
                continue;
            };
            let (check, _) = sim_check(&sim, &expected, &params, variant, c.config.k, c.config.s)?;
            mismatch |= !check.bit_identical;
            let gcells = params.cells() as f64 * params.iterations as f64 / (check.measured_cycles as f64 / clock) / 1e9;
            println!(
                "{:<10} {:>3} {:>3} {:<9} {:>12} {:>12} {:>+7.2}% {:>10.3}",
                variant.name(),
                check.k,
                check.s,
                if check.bit_identical { "MATCH" } else { "MISMATCH" },
                check.measured_cycles,
                check.model_cycles,
                100.0 * check.relative_error,
                gcells
            );
        }
        return if mismatch { Err(CliError::new(EXIT_MISMATCH, "a variant differs from the oracle")) } else { Ok(()) };
    }

    let chosen = match override_candidate(&expl, design) {
        Some(c) => c?,
        None => first_buildable(expl)?.1,
    };
    let cfg = &chosen.config;
    let (check, result) = sim_check(&sim, &expected, &params, cfg.variant, cfg.k, cfg.s)?;
    println!("design {cfg}");
    print_check(&check);
    if trace {
        print_trace(&result);
    }
    if check.bit_identical {
        Ok(())
    } else {
        Err(CliError::new(EXIT_MISMATCH, format!("{cfg} differs from the oracle in {} cells", check.mismatched_cells)))
    }
}

fn cmd_generate(
    args: &KernelArgs,
    budget: &BudgetArgs,
    design: &DesignArgs,
    platform: &PlatformSpec,
    out: &Path,
    seed: u64,
    fallback_on_reject: bool,
) -> Result<()> {
    let program = load_program(args)?;
    let expl = explore(&program, platform, &options(budget))?;
    let (expl, chosen) = match override_candidate(&expl, design) {
        Some(c) => {
            let c = c?;
            (expl, c)
        }
        None if fallback_on_reject => first_buildable(expl)?,
        None => {
            let w = expl.selection.winner.clone();
            (expl, w)
        }
    };
    let plan = CodegenPlan::new(&expl.program, &expl.params, &chosen.config, &expl.platform).map_err(|e| {
        let hint = if design.variant.is_none() && !fallback_on_reject { "; --fallback-on-reject tries the next-ranked design" } else { "" };
        CliError::new(EXIT_INFEASIBLE, format!("{e}{hint}"))
    })?;
    let report = DesignReport::new(&expl, Some(&chosen), Some(seed));
    let stem = plan.file_stem();
    for (name, text) in [
        (format!("{stem}.kernel.cpp.txt"), emit_kernel(&plan)),
        (format!("{stem}.host.cpp.txt"), emit_host(&plan)),
        (format!("{stem}.report.json"), report.to_json()),
    ] {
        let path = write_file(out, &name, &text)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
