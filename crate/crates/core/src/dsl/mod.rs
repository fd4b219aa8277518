//! Stencil DSL front end.
//!
//! A kernel file is line oriented:
//!
//! ```text
//! kernel: JACOBI2D
//! iteration: 4
//! input float: in_1(9720, 1024)
//! output float: out_1(0,0) = ( in_1(0,1) + in_1(1,0) + in_1(0,0) + in_1(0,-1) + in_1(-1,0) ) / 5
//! ```
//!
//! `local` stages declare intermediate arrays that later stages may read.
//! Lines starting with `#` are comments. Identifiers are case sensitive and
//! keywords are lowercase.

mod ast;
mod lexer;
mod parser;
mod pretty;
mod validate;

pub use ast::{ArrayDecl, BinOp, CellType, Expr, StageDef, StencilProgram};
pub use parser::parse_syntax;
pub use pretty::{pretty_print, ExprDisplay};
pub use validate::{local_order, validate, Diagnostic, DiagnosticKind, Severity};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DslError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("semantic error: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Semantic(Vec<Diagnostic>),
}

impl DslError {
    pub(crate) fn syntax(line: usize, col: usize, message: impl Into<String>) -> Self {
        DslError::Syntax { line, col, message: message.into() }
    }
}

/// Parses and semantically checks DSL source. Warnings do not fail the
/// parse; any error-severity diagnostic does.
pub fn parse(source: &str) -> Result<StencilProgram, DslError> {
    let program = parse_syntax(source)?;
    let errors: Vec<Diagnostic> = validate(&program).into_iter().filter(|d| d.severity == Severity::Error).collect();
    if errors.is_empty() {
        Ok(program)
    } else {
        Err(DslError::Semantic(errors))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const JACOBI2D: &str = "kernel: JACOBI2D\niteration: 4\ninput float: in_1(9720, 1024)\noutput float: out_1(0,0) = ( in_1(0,1) + in_1(1,0) + in_1(0,0) + in_1(0,-1) + in_1(-1,0) ) / 5\n";

    fn kinds(src: &str) -> Vec<DiagnosticKind> {
        validate(&parse_syntax(src).unwrap()).into_iter().map(|d| d.kind).collect()
    }

    #[test]
    fn jacobi_listing_parses() {
        let p = parse(JACOBI2D).unwrap();
        assert_eq!(p.kernel_name, "JACOBI2D");
        assert_eq!(p.iterations, 4);
        assert_eq!(p.inputs.len(), 1);
        assert_eq!(p.inputs[0].extents, vec![9720, 1024]);
        assert_eq!(p.outputs[0].target, "out_1");
        let mut n = 0;
        p.outputs[0].expr.visit_accesses(&mut |name, _| {
            assert_eq!(name, "in_1");
            n += 1;
        });
        assert_eq!(n, 5);
        assert!(validate(&p).is_empty());
    }

    #[test]
    fn zero_iterations_is_rejected() {
        let err = parse("kernel: X\niteration: 0\ninput float: a(8,8)\noutput float: b(0,0) = a(0,0)\n").unwrap_err();
        let DslError::Semantic(d) = err else { panic!() };
        assert_eq!(d[0].kind, DiagnosticKind::InvalidIterationCount);
    }

    #[test]
    fn self_reading_local_is_cyclic() {
        let src = "kernel: K\niteration: 1\ninput float: x(8,8)\nlocal float: a(0,0) = a(0,1) + x(0,0)\noutput float: o(0,0) = a(0,0)\n";
        assert_eq!(kinds(src), vec![DiagnosticKind::CyclicStageDependency]);
        let mutual = "kernel: K\niteration: 1\ninput float: x(8,8)\nlocal float: a(0,0) = b(0,0)\nlocal float: b(0,0) = a(0,0)\noutput float: o(0,0) = b(0,0)\n";
        assert_eq!(kinds(mutual), vec![DiagnosticKind::CyclicStageDependency]);
    }

    #[test]
    fn undeclared_and_output_reads() {
        let src = "kernel: K\niteration: 1\ninput float: in_1(8,8)\noutput float: out_1(0,0) = in_9(0,0)\n";
        assert_eq!(kinds(src), vec![DiagnosticKind::UndeclaredArray]);
        let src = "kernel: K\niteration: 1\ninput float: in_1(8,8)\noutput float: o1(0,0) = in_1(0,0)\noutput float: o2(0,0) = o1(0,0)\n";
        assert_eq!(kinds(src), vec![DiagnosticKind::MultipleOutputs, DiagnosticKind::UnreadableArray]);
    }

    #[test]
    fn multiple_outputs_parse_with_warning() {
        let src = "kernel: K\niteration: 1\ninput float: a(8,8)\noutput float: o1(0,0) = a(0,0)\noutput float: o2(0,0) = a(1,0)\n";
        let p = parse(src).unwrap();
        assert_eq!(p.outputs.len(), 2);
        assert!(p.output().is_none());
        let d = validate(&p);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].severity, Severity::Warning);
    }

    #[test]
    fn shape_errors() {
        use DiagnosticKind::*;
        let lhs = "kernel: K\niteration: 1\ninput float: a(8,8)\noutput float: b(1,0) = a(0,0)\n";
        assert_eq!(kinds(lhs), vec![NonZeroLhsOffset]);
        let dim = "kernel: K\niteration: 1\ninput float: a(8,8)\noutput float: b(0,0) = a(0,0,0)\n";
        assert_eq!(kinds(dim), vec![DimensionalityMismatch]);
        let ext = "kernel: K\niteration: 1\ninput float: a(8,8)\ninput float: c(8,9)\noutput float: b(0,0) = a(0,0) + c(0,0)\n";
        assert_eq!(kinds(ext), vec![ExtentMismatch]);
        let small = "kernel: K\niteration: 1\ninput float: a(2,8)\noutput float: b(0,0) = a(0,0)\n";
        assert_eq!(kinds(small), vec![ExtentTooSmall]);
        let one_d = "kernel: K\niteration: 1\ninput float: a(8)\noutput float: b(0) = a(0)\n";
        assert_eq!(kinds(one_d), vec![UnsupportedDimensionality]);
        let far = "kernel: K\niteration: 1\ninput float: a(8,8)\noutput float: b(0,0) = a(9,0)\n";
        assert_eq!(kinds(far), vec![OffsetOutOfRange]);
        let dup = "kernel: K\niteration: 1\ninput float: a(8,8)\noutput float: a(0,0) = a(0,0)\n";
        assert_eq!(kinds(dup), vec![DuplicateArray]);
        let none = "kernel: K\niteration: 1\n";
        assert_eq!(kinds(none), vec![MissingInput, MissingOutput]);
    }

    #[test]
    fn local_order_follows_dependencies() {
        let src = "kernel: K\niteration: 1\ninput float: x(8,8)\nlocal float: b(0,0) = a(0,0)\nlocal float: a(0,0) = x(0,0)\noutput float: o(0,0) = b(0,0)\n";
        let p = parse(src).unwrap();
        assert_eq!(local_order(&p).unwrap(), vec![1, 0]);
    }

    #[test]
    fn pretty_print_round_trips_listing() {
        let p = parse(JACOBI2D).unwrap();
        let text = pretty_print(&p);
        assert_eq!(parse(&text).unwrap(), p);
        assert!(text.contains("(in_1(0, 1) + in_1(1, 0) + in_1(0, 0) + in_1(0, -1) + in_1(-1, 0)) / 5"));
    }
}
