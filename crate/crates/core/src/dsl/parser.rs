use super::ast::{ArrayDecl, BinOp, CellType, Expr, StageDef, StencilProgram};
use super::lexer::{lex_line, Tok, Token};
use super::DslError;

/// Parses DSL text into a program without running semantic checks.
pub fn parse_syntax(source: &str) -> Result<StencilProgram, DslError> {
    let mut kernel_name: Option<String> = None;
    let mut iterations: Option<u32> = None;
    let mut inputs = Vec::new();
    let mut locals = Vec::new();
    let mut outputs = Vec::new();
    let mut last_line = 1;

    for (idx, raw) in source.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let trimmed = raw.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let indent = raw.len() - trimmed.len();
        let indent_cols = raw[..indent].chars().count();

        if let Some(rest) = strip_keyword(trimmed, "kernel") {
            if kernel_name.is_some() {
                return Err(DslError::syntax(line, indent_cols + 1, "duplicate `kernel` line"));
            }
            kernel_name = Some(parse_kernel_line(rest, line, indent_cols + "kernel".len())?);
            continue;
        }

        let tokens = lex_line(raw, line)?;
        let mut p = LineParser { tokens, pos: 0, line, line_len: raw.chars().count() };
        let head = p.expect_ident("a keyword")?;
        match head.as_str() {
            "iteration" => {
                if iterations.is_some() {
                    return Err(DslError::syntax(line, indent_cols + 1, "duplicate `iteration` line"));
                }
                p.expect(Tok::Colon)?;
                let (value, col) = p.expect_signed_int()?;
                if value < 0 || value > u32::MAX as i64 {
                    return Err(DslError::syntax(line, col, "iteration count out of range"));
                }
                iterations = Some(value as u32);
                p.expect_end()?;
            }
            "input" => {
                let cell_type = p.cell_type()?;
                p.expect(Tok::Colon)?;
                let name = p.expect_ident("an array name")?;
                p.expect(Tok::LParen)?;
                let mut extents = Vec::new();
                loop {
                    let (value, col) = p.expect_signed_int()?;
                    if value <= 0 {
                        return Err(DslError::syntax(line, col, "array extents must be positive"));
                    }
                    extents.push(value as usize);
                    if !p.eat(&Tok::Comma) {
                        break;
                    }
                }
                p.expect(Tok::RParen)?;
                p.expect_end()?;
                inputs.push(ArrayDecl { name, cell_type, extents });
            }
            "local" | "output" => {
                let cell_type = p.cell_type()?;
                p.expect(Tok::Colon)?;
                let target = p.expect_ident("an array name")?;
                let lhs_offset = p.offset_list()?;
                p.expect(Tok::Eq)?;
                let expr = p.expr()?;
                p.expect_end()?;
                let stage = StageDef { target, cell_type, lhs_offset, expr };
                if head == "local" {
                    locals.push(stage);
                } else {
                    outputs.push(stage);
                }
            }
            other => {
                return Err(DslError::syntax(
                    line,
                    indent_cols + 1,
                    format!("unknown keyword `{other}` (expected kernel, iteration, input, local or output)"),
                ));
            }
        }
    }

    let kernel_name = kernel_name.ok_or_else(|| DslError::syntax(last_line, 1, "missing `kernel:` line"))?;
    let iterations = iterations.ok_or_else(|| DslError::syntax(last_line, 1, "missing `iteration:` line"))?;
    Ok(StencilProgram { kernel_name, iterations, inputs, locals, outputs })
}

/// Returns the text after `kw` when the line starts with the keyword as a
/// whole word.
fn strip_keyword<'a>(line: &'a str, kw: &str) -> Option<&'a str> {
    let rest = line.strip_prefix(kw)?;
    match rest.chars().next() {
        Some(c) if c.is_ascii_alphanumeric() || c == '_' => None,
        _ => Some(rest),
    }
}

fn parse_kernel_line(rest: &str, line: usize, col0: usize) -> Result<String, DslError> {
    let after_ws = rest.trim_start();
    let col = col0 + (rest.len() - after_ws.len()) + 1;
    let Some(after_colon) = after_ws.strip_prefix(':') else {
        return Err(DslError::syntax(line, col, "expected `:` after `kernel`"));
    };
    let name = after_colon.trim_start();
    let name_col = col + 1 + (after_colon.len() - name.len());
    let name = name.trim_end();
    if name.is_empty() {
        return Err(DslError::syntax(line, name_col, "missing kernel name"));
    }
    let valid_start = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_');
    if !valid_start || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
        return Err(DslError::syntax(line, name_col, format!("invalid kernel name `{name}`")));
    }
    Ok(name.to_string())
}

struct LineParser {
    tokens: Vec<Token>,
    pos: usize,
    line: usize,
    line_len: usize,
}

impl LineParser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn here(&self) -> usize {
        self.peek().map(|t| t.col).unwrap_or(self.line_len + 1)
    }

    fn err(&self, message: impl Into<String>) -> DslError {
        DslError::syntax(self.line, self.here(), message)
    }

    fn unexpected(&self, wanted: &str) -> DslError {
        match self.peek() {
            Some(t) => self.err(format!("expected {wanted}, found {}", t.tok.describe())),
            None => self.err(format!("expected {wanted}, found end of line")),
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek().is_some_and(|t| &t.tok == tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), DslError> {
        if self.eat(&tok) {
            Ok(())
        } else {
            Err(self.unexpected(&tok.describe()))
        }
    }

    fn expect_end(&self) -> Result<(), DslError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(self.err(format!("unexpected {} at end of statement", t.tok.describe()))),
        }
    }

    fn expect_ident(&mut self, wanted: &str) -> Result<String, DslError> {
        match self.peek() {
            Some(Token { tok: Tok::Ident(s), .. }) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.unexpected(wanted)),
        }
    }

    fn cell_type(&mut self) -> Result<CellType, DslError> {
        let col = self.here();
        let name = self.expect_ident("a cell type")?;
        match name.as_str() {
            "float" => Ok(CellType::Float),
            other => Err(DslError::syntax(self.line, col, format!("unsupported cell type `{other}`"))),
        }
    }

    fn expect_signed_int(&mut self) -> Result<(i64, usize), DslError> {
        let col = self.here();
        let negative = self.eat(&Tok::Minus);
        match self.peek() {
            Some(Token { tok: Tok::Number(text), .. }) => {
                let value: i64 = text
                    .parse()
                    .map_err(|_| DslError::syntax(self.line, self.here(), format!("expected an integer, found `{text}`")))?;
                self.pos += 1;
                Ok((if negative { -value } else { value }, col))
            }
            _ => Err(self.unexpected("an integer")),
        }
    }

    fn offset_list(&mut self) -> Result<Vec<i64>, DslError> {
        self.expect(Tok::LParen)?;
        let mut offsets = Vec::new();
        loop {
            offsets.push(self.expect_signed_int()?.0);
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::RParen)?;
        Ok(offsets)
    }

    fn expr(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat(&Tok::Plus) {
                BinOp::Add
            } else if self.eat(&Tok::Minus) {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat(&Tok::Star) {
                BinOp::Mul
            } else if self.eat(&Tok::Slash) {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs_col = self.here();
            let rhs = self.unary()?;
            if op == BinOp::Div && is_literal_zero(&rhs) {
                return Err(DslError::syntax(self.line, rhs_col, "division by literal zero"));
            }
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, DslError> {
        if self.eat(&Tok::Minus) {
            let operand = self.unary()?;
            return Ok(Expr::Neg { operand: Box::new(operand) });
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, DslError> {
        match self.peek().map(|t| t.tok.clone()) {
            Some(Tok::Number(text)) => {
                let value: f64 = text
                    .parse()
                    .ok()
                    .filter(|v: &f64| v.is_finite())
                    .ok_or_else(|| self.err(format!("invalid numeric literal `{text}`")))?;
                self.pos += 1;
                Ok(Expr::constant(value))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                let offset = self.offset_list()?;
                Ok(Expr::access(name, offset))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            _ => Err(self.unexpected("an expression")),
        }
    }
}

fn is_literal_zero(e: &Expr) -> bool {
    match e {
        Expr::Const { value } => *value == 0.0,
        Expr::Neg { operand } => is_literal_zero(operand),
        _ => false,
    }
}
