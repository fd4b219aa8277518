use std::fmt::{self, Write};

use super::ast::{Expr, StageDef, StencilProgram};

/// Renders a program back to DSL text. Parsing the result yields the same
/// tree: parentheses are emitted exactly where precedence or left
/// associativity would otherwise regroup operands.
pub fn pretty_print(program: &StencilProgram) -> String {
    let mut out = String::new();
    writeln!(out, "kernel: {}", program.kernel_name).unwrap();
    writeln!(out, "iteration: {}", program.iterations).unwrap();
    for input in &program.inputs {
        let extents: Vec<String> = input.extents.iter().map(|e| e.to_string()).collect();
        writeln!(out, "input {}: {}({})", input.cell_type.keyword(), input.name, extents.join(", ")).unwrap();
    }
    for stage in &program.locals {
        write_stage(&mut out, "local", stage);
    }
    for stage in &program.outputs {
        write_stage(&mut out, "output", stage);
    }
    out
}

fn write_stage(out: &mut String, kw: &str, stage: &StageDef) {
    writeln!(
        out,
        "{kw} {}: {}({}) = {}",
        stage.cell_type.keyword(),
        stage.target,
        join_offsets(&stage.lhs_offset),
        ExprDisplay(&stage.expr)
    )
    .unwrap();
}

fn join_offsets(offset: &[i64]) -> String {
    offset.iter().map(|o| o.to_string()).collect::<Vec<_>>().join(", ")
}

pub struct ExprDisplay<'a>(pub &'a Expr);

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self.0)
    }
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    match e {
        Expr::Access { array, offset } => write!(f, "{array}({})", join_offsets(offset)),
        Expr::Const { value } => write!(f, "{value}"),
        Expr::Neg { operand } => {
            if matches!(**operand, Expr::Binary { .. }) {
                write!(f, "-(")?;
                write_expr(f, operand)?;
                write!(f, ")")
            } else {
                write!(f, "-")?;
                write_expr(f, operand)
            }
        }
        Expr::Binary { op, lhs, rhs } => {
            let prec = op.precedence();
            write_operand(f, lhs, |p| p < prec)?;
            write!(f, " {} ", op.symbol())?;
            write_operand(f, rhs, |p| p <= prec)
        }
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, needs_parens: impl Fn(u8) -> bool) -> fmt::Result {
    match e {
        Expr::Binary { op, .. } if needs_parens(op.precedence()) => {
            write!(f, "(")?;
            write_expr(f, e)?;
            write!(f, ")")
        }
        _ => write_expr(f, e),
    }
}
