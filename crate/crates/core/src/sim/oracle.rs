use std::collections::HashMap;

use crate::analysis::stage_hulls;
use crate::dsl::{local_order, BinOp, Expr, StencilProgram};

use super::grid::Grid;
use super::{prepare, SimError};

/// Reference semantics, evaluated directly on N-d indices with no
/// partitioning, flattening or compilation. Each iteration materialises
/// every local over the whole grid, then the output; the output replaces
/// the last input. Cells whose footprint would leave the grid are zero for
/// locals and copied through for the output.
pub fn oracle(program: &StencilProgram, inputs: &[Grid]) -> Result<Grid, SimError> {
    let program = prepare(program, inputs)?;
    let extents = inputs[0].extents().to_vec();
    let hulls = stage_hulls(&program);
    let order = local_order(&program).map_err(|c| SimError::Unsupported(format!("cyclic local `{c}`")))?;

    let mut arrays: HashMap<&str, Grid> = program.inputs.iter().zip(inputs).map(|(d, g)| (d.name.as_str(), g.clone())).collect();
    let iterated = program.inputs[program.iterated_input()].name.as_str();
    let output = &program.outputs[0];

    for _ in 0..program.iterations {
        for &i in &order {
            let stage = &program.locals[i];
            let reach = hulls[&stage.target].reach();
            let grid = Grid::from_fn(&extents, |idx| if reach.contains(idx, &extents) { eval(&stage.expr, idx, &arrays) } else { 0.0 })?;
            arrays.insert(stage.target.as_str(), grid);
        }
        let reach = hulls[&output.target].reach();
        let previous = &arrays[iterated];
        let next = Grid::from_fn(&extents, |idx| {
            if reach.contains(idx, &extents) {
                eval(&output.expr, idx, &arrays)
            } else {
                previous.get(idx)
            }
        })?;
        arrays.insert(iterated, next);
    }
    Ok(arrays.remove(iterated).expect("iterated input is always present"))
}

fn eval(expr: &Expr, idx: &[usize], arrays: &HashMap<&str, Grid>) -> f32 {
    match expr {
        Expr::Access { array, offset } => {
            let at: Vec<usize> = idx.iter().zip(offset).map(|(&i, &o)| (i as i64 + o) as usize).collect();
            arrays[array.as_str()].get(&at)
        }
        Expr::Const { value } => *value as f32,
        Expr::Neg { operand } => -eval(operand, idx, arrays),
        Expr::Binary { op, lhs, rhs } => {
            let a = eval(lhs, idx, arrays);
            let b = eval(rhs, idx, arrays);
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => a / b,
            }
        }
    }
}
