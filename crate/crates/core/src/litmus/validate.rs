use std::collections::{BTreeMap, BTreeSet};

use super::{Expr, Instruction, LitmusTest, ValidationError, ValidationKind};

pub(super) fn validate(test: &LitmusTest) -> Result<(), ValidationError> {
    let mut thread_names = BTreeSet::new();
    for t in &test.threads {
        if !thread_names.insert(t.name.as_str()) {
            return Err(ValidationError::new(
                ValidationKind::DuplicateThread,
                format!("thread `{}` declared twice", t.name),
            ));
        }
    }

    let mut owner: BTreeMap<String, &str> = BTreeMap::new();
    for t in &test.threads {
        let mut assigned = BTreeSet::new();
        check_block(test, &t.body, &mut assigned)?;
        for reg in t.registers() {
            if let Some(other) = owner.get(&reg) {
                return Err(ValidationError::new(
                    ValidationKind::CrossThreadRegister,
                    format!("register `{reg}` used by threads `{other}` and `{}`", t.name),
                ));
            }
            owner.insert(reg, &t.name);
        }
    }

    for name in test.post.names() {
        if !test.is_shared(name) && !owner.contains_key(name) {
            return Err(ValidationError::new(
                ValidationKind::UndeclaredVar,
                format!("postcondition mentions unknown name `{name}`"),
            ));
        }
    }
    Ok(())
}

fn check_block(
    test: &LitmusTest,
    block: &[Instruction],
    assigned: &mut BTreeSet<String>,
) -> Result<(), ValidationError> {
    for ins in block {
        match ins {
            Instruction::Assign { reg, expr } => {
                check_register(test, reg)?;
                check_expr(test, expr)?;
            }
            Instruction::Store { loc, expr, .. } => {
                check_shared(test, loc)?;
                check_expr(test, expr)?;
            }
            Instruction::Load { reg, loc, deps, .. } => {
                check_register(test, reg)?;
                check_shared(test, loc)?;
                for d in deps {
                    if !assigned.contains(d) {
                        return Err(ValidationError::new(
                            ValidationKind::BadDep,
                            format!("dependency on `{d}` which is not assigned earlier"),
                        ));
                    }
                }
            }
            Instruction::Fence => {}
            Instruction::Swap { reg, loc, expr } => {
                check_register(test, reg)?;
                check_shared(test, loc)?;
                check_expr(test, expr)?;
            }
            Instruction::Branch {
                cond,
                then_block,
                else_block,
                ..
            } => {
                check_expr(test, cond)?;
                let mut then_assigned = assigned.clone();
                check_block(test, then_block, &mut then_assigned)?;
                let mut else_assigned = assigned.clone();
                check_block(test, else_block, &mut else_assigned)?;
                assigned.extend(then_assigned);
                assigned.extend(else_assigned);
            }
        }
        if let Some(r) = ins.defined_register() {
            assigned.insert(r.to_string());
        }
    }
    Ok(())
}

fn check_shared(test: &LitmusTest, loc: &str) -> Result<(), ValidationError> {
    if test.is_shared(loc) {
        Ok(())
    } else {
        Err(ValidationError::new(
            ValidationKind::UndeclaredVar,
            format!("shared variable `{loc}` missing from init"),
        ))
    }
}

fn check_register(test: &LitmusTest, reg: &str) -> Result<(), ValidationError> {
    if test.is_shared(reg) {
        Err(ValidationError::new(
            ValidationKind::UndeclaredVar,
            format!("`{reg}` is a shared variable, not a register"),
        ))
    } else {
        Ok(())
    }
}

fn check_expr(test: &LitmusTest, expr: &Expr) -> Result<(), ValidationError> {
    match expr.registers().into_iter().find(|r| test.is_shared(r)) {
        Some(x) => Err(ValidationError::new(
            ValidationKind::SharedInExpression,
            format!("shared variable `{x}` used inside an expression"),
        )),
        None => Ok(()),
    }
}
