use serde::Serialize;

/// Scalar type of a stencil cell. Only 32-bit floats are supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CellType {
    Float,
}

impl CellType {
    pub fn bytes(self) -> u32 {
        match self {
            CellType::Float => 4,
        }
    }

    pub fn keyword(self) -> &'static str {
        match self {
            CellType::Float => "float",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }

    pub(crate) fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }
}

/// Expression tree of a stage update. Evaluation order follows the tree
/// shape exactly; nothing downstream reassociates it.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Expr {
    Access { array: String, offset: Vec<i64> },
    Const { value: f64 },
    Neg { operand: Box<Expr> },
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
}

impl Expr {
    pub fn access(array: impl Into<String>, offset: Vec<i64>) -> Self {
        Expr::Access { array: array.into(), offset }
    }

    pub fn constant(value: f64) -> Self {
        Expr::Const { value }
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }
    }

    /// Calls `f` on every array access in left-to-right order.
    pub fn visit_accesses<'a>(&'a self, f: &mut impl FnMut(&'a str, &'a [i64])) {
        match self {
            Expr::Access { array, offset } => f(array, offset),
            Expr::Const { .. } => {}
            Expr::Neg { operand } => operand.visit_accesses(f),
            Expr::Binary { lhs, rhs, .. } => {
                lhs.visit_accesses(f);
                rhs.visit_accesses(f);
            }
        }
    }

    /// Number of binary arithmetic operator nodes.
    pub fn binary_op_count(&self) -> u64 {
        match self {
            Expr::Access { .. } | Expr::Const { .. } => 0,
            Expr::Neg { operand } => operand.binary_op_count(),
            Expr::Binary { lhs, rhs, .. } => 1 + lhs.binary_op_count() + rhs.binary_op_count(),
        }
    }

    /// Rewrites every access offset in place.
    pub fn map_offsets(&mut self, f: &mut impl FnMut(&mut Vec<i64>)) {
        match self {
            Expr::Access { offset, .. } => f(offset),
            Expr::Const { .. } => {}
            Expr::Neg { operand } => operand.map_offsets(f),
            Expr::Binary { lhs, rhs, .. } => {
                lhs.map_offsets(f);
                rhs.map_offsets(f);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArrayDecl {
    pub name: String,
    pub cell_type: CellType,
    pub extents: Vec<usize>,
}

/// A `local` or `output` statement: `target(0,...,0) = expr`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageDef {
    pub target: String,
    pub cell_type: CellType,
    /// Offset written on the left-hand side; must be all zeros.
    pub lhs_offset: Vec<i64>,
    pub expr: Expr,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StencilProgram {
    pub kernel_name: String,
    pub iterations: u32,
    pub inputs: Vec<ArrayDecl>,
    pub locals: Vec<StageDef>,
    pub outputs: Vec<StageDef>,
}

impl StencilProgram {
    /// Extents shared by every array, taken from the first input.
    pub fn extents(&self) -> &[usize] {
        self.inputs.first().map(|a| a.extents.as_slice()).unwrap_or(&[])
    }

    pub fn dims(&self) -> usize {
        self.extents().len()
    }

    pub fn input(&self, name: &str) -> Option<&ArrayDecl> {
        self.inputs.iter().find(|a| a.name == name)
    }

    pub fn local(&self, name: &str) -> Option<&StageDef> {
        self.locals.iter().find(|s| s.target == name)
    }

    /// The single output stage. Multi-output programs are parsed but not
    /// executable.
    pub fn output(&self) -> Option<&StageDef> {
        match self.outputs.as_slice() {
            [only] => Some(only),
            _ => None,
        }
    }

    /// Index of the input the output replaces between iterations.
    pub fn iterated_input(&self) -> usize {
        self.inputs.len().saturating_sub(1)
    }

    pub fn with_iterations(mut self, iterations: u32) -> Self {
        self.iterations = iterations;
        self
    }

    /// Same program over different array extents (used to simulate a
    /// kernel declared at production size on a small test grid).
    pub fn with_extents(mut self, extents: &[usize]) -> Self {
        for decl in &mut self.inputs {
            decl.extents = extents.to_vec();
        }
        self
    }

    pub fn stages(&self) -> impl Iterator<Item = &StageDef> {
        self.locals.iter().chain(self.outputs.iter())
    }
}
