//! Canonical pretty-printer. The output of [`serialize_litmus`] parses back to
//! an identical AST.

use std::fmt::Write as _;

use super::{BinOp, Expr, Instruction, LitmusTest, LoadOrder, Postcondition, StoreOrder};

pub fn serialize_litmus(test: &LitmusTest) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "test {}", test.name);
    out.push_str("init {");
    for (var, value) in &test.init {
        let _ = write!(out, " {var} = {value};");
    }
    out.push_str(" }\n");
    for thread in &test.threads {
        let _ = writeln!(out, "thread {} {}", thread.name, block(&thread.body));
    }
    let _ = writeln!(out, "exists ({})", post(&test.post, 0));
    if let Some(expect) = &test.expectations {
        out.push_str("expect {");
        for (model, e) in expect {
            let _ = write!(out, " {model}: {e};");
        }
        out.push_str(" }\n");
    }
    out
}

fn block(body: &[Instruction]) -> String {
    if body.is_empty() {
        return "{ }".into();
    }
    let parts: Vec<String> = body.iter().map(instruction).collect();
    format!("{{ {} }}", parts.join("; "))
}

fn instruction(ins: &Instruction) -> String {
    match ins {
        Instruction::Assign { reg, expr } => format!("{reg} := {}", expr_text(expr, 0)),
        Instruction::Store { loc, expr, order } => {
            let op = match order {
                StoreOrder::Plain => ":=",
                StoreOrder::Release => ":=rel",
            };
            format!("{loc} {op} {}", expr_text(expr, 0))
        }
        Instruction::Load { reg, loc, order, deps } => {
            let op = match order {
                LoadOrder::Plain => ":=",
                LoadOrder::Acquire => ":=acq",
            };
            let mut s = format!("{reg} {op} {loc}");
            if !deps.is_empty() {
                let names: Vec<&str> = deps.iter().map(String::as_str).collect();
                let _ = write!(s, " dep {}", names.join(", "));
            }
            s
        }
        Instruction::Fence => "fence".into(),
        Instruction::Swap { reg, loc, expr } => {
            format!("{reg} := SWAP({loc}, {})", expr_text(expr, 0))
        }
        Instruction::Branch {
            cond,
            equals,
            then_block,
            else_block,
        } => {
            let mut s = format!("if ({} = {equals}) {}", expr_text(cond, 0), block(then_block));
            if !else_block.is_empty() {
                let _ = write!(s, " else {}", block(else_block));
            }
            s
        }
    }
}

fn binop_prec(op: BinOp) -> u8 {
    match op {
        BinOp::Add | BinOp::Sub => 1,
        BinOp::Mul => 2,
    }
}

/// Prints `e` in a context that binds at least as tightly as `ctx`.
fn expr_text(e: &Expr, ctx: u8) -> String {
    match e {
        Expr::Const(v) => v.to_string(),
        Expr::Reg(r) => r.clone(),
        // `-(1)` keeps a negated literal distinct from the literal `-1`
        Expr::Neg(inner) => match inner.as_ref() {
            Expr::Const(_) => format!("-({})", expr_text(inner, 0)),
            _ => format!("-{}", expr_text(inner, 3)),
        },
        Expr::Bin(op, l, r) => {
            let p = binop_prec(*op);
            let s = format!("{} {} {}", expr_text(l, p), op.symbol(), expr_text(r, p + 1));
            if p < ctx {
                format!("({s})")
            } else {
                s
            }
        }
    }
}

fn post_prec(p: &Postcondition) -> u8 {
    match p {
        Postcondition::Or(..) => 1,
        Postcondition::And(..) => 2,
        _ => 3,
    }
}

fn post(p: &Postcondition, ctx: u8) -> String {
    let s = match p {
        Postcondition::True => "true".into(),
        Postcondition::False => "false".into(),
        Postcondition::Atom { name, value } => format!("{name} = {value}"),
        Postcondition::Not(inner) => format!("~{}", post(inner, 3)),
        Postcondition::And(a, b) => format!("{} /\\ {}", post(a, 2), post(b, 3)),
        Postcondition::Or(a, b) => format!("{} \\/ {}", post(a, 1), post(b, 2)),
    };
    if post_prec(p) < ctx {
        format!("({s})")
    } else {
        s
    }
}
