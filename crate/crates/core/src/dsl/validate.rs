use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;

use super::ast::{StageDef, StencilProgram};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DiagnosticKind {
    InvalidIterationCount,
    MissingInput,
    MissingOutput,
    DuplicateArray,
    UnsupportedDimensionality,
    ExtentTooSmall,
    ExtentMismatch,
    UndeclaredArray,
    UnreadableArray,
    DimensionalityMismatch,
    NonZeroLhsOffset,
    OffsetOutOfRange,
    CyclicStageDependency,
    MultipleOutputs,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    fn error(kind: DiagnosticKind, message: impl Into<String>) -> Self {
        Diagnostic { kind, severity: Severity::Error, message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}[{:?}]: {}", self.kind, self.message)
    }
}

/// Checks every semantic invariant of a parsed program. Returns an empty
/// list for a fully valid single-output program; multi-output programs get a
/// warning because nothing downstream can execute them.
pub fn validate(program: &StencilProgram) -> Vec<Diagnostic> {
    use DiagnosticKind::*;
    let mut diags = Vec::new();

    if program.iterations < 1 {
        diags.push(Diagnostic::error(InvalidIterationCount, format!("iteration count must be at least 1, got {}", program.iterations)));
    }
    if program.inputs.is_empty() {
        diags.push(Diagnostic::error(MissingInput, "at least one `input` array is required"));
    }
    if program.outputs.is_empty() {
        diags.push(Diagnostic::error(MissingOutput, "at least one `output` stage is required"));
    }
    if program.outputs.len() > 1 {
        diags.push(Diagnostic {
            kind: MultipleOutputs,
            severity: Severity::Warning,
            message: format!("{} output stages declared; only single-output kernels can be analyzed, simulated or generated", program.outputs.len()),
        });
    }

    let mut seen = BTreeSet::new();
    let names = program.inputs.iter().map(|a| &a.name).chain(program.stages().map(|s| &s.target));
    for name in names {
        if !seen.insert(name.as_str()) {
            diags.push(Diagnostic::error(DuplicateArray, format!("array `{name}` is declared more than once")));
        }
    }

    let reference = program.inputs.first().map(|a| a.extents.clone());
    for input in &program.inputs {
        if !(2..=3).contains(&input.extents.len()) {
            diags.push(Diagnostic::error(
                UnsupportedDimensionality,
                format!("array `{}` has {} dimensions; only 2-D and 3-D arrays are supported", input.name, input.extents.len()),
            ));
        }
        if let Some(e) = input.extents.iter().find(|&&e| e < 3) {
            diags.push(Diagnostic::error(ExtentTooSmall, format!("array `{}` has extent {e}; every extent must be at least 3", input.name)));
        }
        if let Some(reference) = &reference {
            if &input.extents != reference {
                diags.push(Diagnostic::error(
                    ExtentMismatch,
                    format!("array `{}` has extents {:?} but `{}` has {:?}", input.name, input.extents, program.inputs[0].name, reference),
                ));
            }
        }
    }

    let dims = program.dims();
    let extents = program.extents().to_vec();
    for stage in program.stages() {
        if stage.lhs_offset.len() != dims && dims > 0 {
            diags.push(Diagnostic::error(
                DimensionalityMismatch,
                format!("`{}` is written with {} indices but arrays have {dims} dimensions", stage.target, stage.lhs_offset.len()),
            ));
        }
        if stage.lhs_offset.iter().any(|&o| o != 0) {
            diags.push(Diagnostic::error(NonZeroLhsOffset, format!("`{}` must be written at the zero offset, got {:?}", stage.target, stage.lhs_offset)));
        }
        check_accesses(program, stage, dims, &extents, &mut diags);
    }

    if let Err(cycle) = local_order(program) {
        diags.push(Diagnostic::error(CyclicStageDependency, format!("local stages form a dependency cycle through `{cycle}`")));
    }
    diags
}

fn check_accesses(program: &StencilProgram, stage: &StageDef, dims: usize, extents: &[usize], diags: &mut Vec<Diagnostic>) {
    use DiagnosticKind::*;
    let mut found = Vec::new();
    stage.expr.visit_accesses(&mut |name, offset| found.push((name, offset)));
    for (name, offset) in found {
        if program.input(name).is_none() && program.local(name).is_none() {
            if program.outputs.iter().any(|o| o.target == name) {
                diags.push(Diagnostic::error(UnreadableArray, format!("`{}` reads output `{name}`; only inputs and locals may be read", stage.target)));
            } else {
                diags.push(Diagnostic::error(UndeclaredArray, format!("`{}` reads undeclared array `{name}`", stage.target)));
            }
        }
        if dims > 0 && offset.len() != dims {
            diags.push(Diagnostic::error(
                DimensionalityMismatch,
                format!("`{name}` is accessed with {} indices in `{}` but arrays have {dims} dimensions", offset.len(), stage.target),
            ));
        }
        for (o, e) in offset.iter().zip(extents) {
            if o.unsigned_abs() as usize > *e {
                diags.push(Diagnostic::error(OffsetOutOfRange, format!("offset {offset:?} on `{name}` exceeds extents {extents:?}")));
                break;
            }
        }
    }
}

/// Topological order over locals (indices into `program.locals`), stable with
/// respect to declaration order. On a cycle returns the name of a local on
/// it.
pub fn local_order(program: &StencilProgram) -> Result<Vec<usize>, String> {
    let index: HashMap<&str, usize> = program.locals.iter().enumerate().map(|(i, s)| (s.target.as_str(), i)).collect();
    let deps: Vec<BTreeSet<usize>> = program
        .locals
        .iter()
        .map(|s| {
            let mut d = BTreeSet::new();
            s.expr.visit_accesses(&mut |name, _| {
                if let Some(&i) = index.get(name) {
                    d.insert(i);
                }
            });
            d
        })
        .collect();

    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state = vec![0u8; deps.len()];
    let mut order = Vec::with_capacity(deps.len());
    fn visit(i: usize, deps: &[BTreeSet<usize>], state: &mut [u8], order: &mut Vec<usize>) -> Result<(), usize> {
        match state[i] {
            2 => return Ok(()),
            1 => return Err(i),
            _ => {}
        }
        state[i] = 1;
        for &d in &deps[i] {
            visit(d, deps, state, order)?;
        }
        state[i] = 2;
        order.push(i);
        Ok(())
    }
    for i in 0..deps.len() {
        visit(i, &deps, &mut state, &mut order).map_err(|c| program.locals[c].target.clone())?;
    }
    Ok(order)
}
