use thiserror::Error;

use super::{add, call, div, mul, neg, pow, sub, BinOp, Expr, Func, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiffError {
    #[error("abs() is not differentiable")]
    NonDifferentiable,
}

impl Expr {
    /// Symbolic partial derivative with respect to `v`.
    pub fn derivative(&self, v: Var) -> Result<Expr, DiffError> {
        Ok(match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var(w) => Expr::Const(if *w == v { 1.0 } else { 0.0 }),
            Expr::Neg(a) => neg(a.derivative(v)?),
            Expr::Call(f, a) => {
                let da = a.derivative(v)?;
                let a = (**a).clone();
                let outer = match f {
                    Func::Sin => call(Func::Cos, a),
                    Func::Cos => neg(call(Func::Sin, a)),
                    Func::Exp => call(Func::Exp, a),
                    Func::Log => div(Expr::Const(1.0), a),
                    Func::Sqrt => div(Expr::Const(0.5), call(Func::Sqrt, a)),
                    Func::Tanh => sub(Expr::Const(1.0), pow(call(Func::Tanh, a), Expr::Const(2.0))),
                    Func::Cosh => call(Func::Sinh, a),
                    Func::Sinh => call(Func::Cosh, a),
                    Func::Abs => return Err(DiffError::NonDifferentiable),
                };
                mul(outer, da)
            }
            Expr::Binary(op, l, r) => {
                let dl = l.derivative(v)?;
                let dr = r.derivative(v)?;
                let (l, r) = ((**l).clone(), (**r).clone());
                match op {
                    BinOp::Add => add(dl, dr),
                    BinOp::Sub => sub(dl, dr),
                    BinOp::Mul => add(mul(dl, r.clone()), mul(l, dr)),
                    BinOp::Div => {
                        // (l/r)' = l'/r - l r'/r^2
                        let first = div(dl, r.clone());
                        let second = div(mul(l, dr), pow(r, Expr::Const(2.0)));
                        sub(first, second)
                    }
                    BinOp::Pow => match r.constant_value() {
                        Some(c) => mul(mul(Expr::Const(c), pow(l, Expr::Const(c - 1.0))), dl),
                        None => {
                            // b^g (g' log b + g b'/b)
                            let whole = pow(l.clone(), r.clone());
                            let inner = add(mul(dr, call(Func::Log, l.clone())), div(mul(r, dl), l));
                            mul(whole, inner)
                        }
                    },
                }
            }
        })
    }

    /// Repeated derivative `d^n/dv^n`.
    pub fn nth_derivative(&self, v: Var, n: usize) -> Result<Expr, DiffError> {
        let mut e = self.clone();
        for _ in 0..n {
            e = e.derivative(v)?;
        }
        Ok(e)
    }

    /// Mixed partial `d^i/dx1^i d^j/dx2^j`.
    pub fn partial(&self, i: usize, j: usize) -> Result<Expr, DiffError> {
        self.nth_derivative(Var::X1, i)?.nth_derivative(Var::X2, j)
    }

    /// Transport derivative `(d/dx1 - lambda d/dx2) self`.
    pub fn transport(&self, lambda: f64) -> Result<Expr, DiffError> {
        Ok(sub(
            self.derivative(Var::X1)?,
            mul(Expr::Const(lambda), self.derivative(Var::X2)?),
        ))
    }
}
