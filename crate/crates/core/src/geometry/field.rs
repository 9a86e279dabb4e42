//! Conformal factors `c(x) > 0` of metrics `g = c(x)^{-2} δ` on a coordinate disk.
//!
//! `c` plays the role of a wave speed: coordinate speed of a unit-speed
//! geodesic equals `c`, so travel time is Riemannian arclength.

use std::fmt;
use std::sync::Arc;

use evalexpr::{DefaultNumericTypes, Node, Operator, Value};
use serde::{Deserialize, Serialize};

use super::{GeometryError, Vec2};

/// Value of `c` together with its coordinate gradient.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldJet {
    pub value: f64,
    pub gradient: Vec2,
}

/// The conformal factor of a disk model.
#[derive(Clone)]
pub enum ConformalField {
    /// Flat metric, `c ≡ 1`.
    Unit,
    /// Stereographic chart of the constant-curvature plane, `c = (1 + κ|x|²)/2`.
    ConstantCurvature { kappa: f64 },
    /// User expression in `x`, `y` (and `r = |x|`), differentiated exactly.
    Expression(Arc<CompiledExpr>),
    /// Values on a regular grid over `[-extent, extent]²`, bicubic interpolation.
    Grid(Arc<GridField>),
}

impl fmt::Debug for ConformalField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConformalField::Unit => write!(f, "Unit"),
            ConformalField::ConstantCurvature { kappa } => {
                write!(f, "ConstantCurvature {{ kappa: {kappa} }}")
            }
            ConformalField::Expression(e) => write!(f, "Expression({:?})", e.source),
            ConformalField::Grid(g) => write!(f, "Grid({}x{})", g.size, g.size),
        }
    }
}

impl ConformalField {
    pub fn expression(source: &str) -> Result<Self, GeometryError> {
        Ok(ConformalField::Expression(Arc::new(CompiledExpr::parse(
            source,
        )?)))
    }

    pub fn grid(spec: GridSpec) -> Result<Self, GeometryError> {
        Ok(ConformalField::Grid(Arc::new(GridField::new(spec)?)))
    }

    #[inline]
    pub fn value(&self, p: Vec2) -> f64 {
        match self {
            ConformalField::Unit => 1.0,
            ConformalField::ConstantCurvature { kappa } => 0.5 * (1.0 + kappa * p.norm_squared()),
            ConformalField::Expression(e) => e.eval(p),
            ConformalField::Grid(g) => g.jet(p).value,
        }
    }

    #[inline]
    pub fn jet(&self, p: Vec2) -> FieldJet {
        match self {
            ConformalField::Unit => FieldJet {
                value: 1.0,
                gradient: Vec2::ZERO,
            },
            ConformalField::ConstantCurvature { kappa } => FieldJet {
                value: 0.5 * (1.0 + kappa * p.norm_squared()),
                gradient: p * *kappa,
            },
            ConformalField::Expression(e) => {
                let d = e.eval_dual(p);
                FieldJet {
                    value: d.v,
                    gradient: Vec2::new(d.dx, d.dy),
                }
            }
            ConformalField::Grid(g) => g.jet(p),
        }
    }

    /// Gaussian curvature `K = c² Δ ln c` of `c^{-2} δ`.
    pub fn gauss_curvature(&self, p: Vec2) -> f64 {
        match self {
            ConformalField::Unit => 0.0,
            ConformalField::ConstantCurvature { kappa } => *kappa,
            _ => {
                // Δ ln c = div(∇c / c), central differences of the exact gradient.
                let h = 1e-4;
                let q = |p: Vec2| {
                    let j = self.jet(p);
                    j.gradient * (1.0 / j.value)
                };
                let ddx = (q(p + Vec2::new(h, 0.0)).x - q(p - Vec2::new(h, 0.0)).x) / (2.0 * h);
                let ddy = (q(p + Vec2::new(0.0, h)).y - q(p - Vec2::new(0.0, h)).y) / (2.0 * h);
                let c = self.value(p);
                c * c * (ddx + ddy)
            }
        }
    }

    /// True when `c` depends only on `|x|`.
    pub fn is_radial(&self) -> bool {
        matches!(
            self,
            ConformalField::Unit | ConformalField::ConstantCurvature { .. }
        )
    }
}

/// Forward-mode dual number carrying a value and its `x`/`y` partials.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Dual {
    pub v: f64,
    pub dx: f64,
    pub dy: f64,
}

impl Dual {
    fn constant(v: f64) -> Self {
        Dual { v, dx: 0.0, dy: 0.0 }
    }

    /// Applies a scalar function with derivative `df` at `self.v`.
    fn chain(self, f: f64, df: f64) -> Self {
        Dual {
            v: f,
            dx: df * self.dx,
            dy: df * self.dy,
        }
    }

    fn add(self, o: Dual) -> Dual {
        Dual {
            v: self.v + o.v,
            dx: self.dx + o.dx,
            dy: self.dy + o.dy,
        }
    }

    fn sub(self, o: Dual) -> Dual {
        Dual {
            v: self.v - o.v,
            dx: self.dx - o.dx,
            dy: self.dy - o.dy,
        }
    }

    fn mul(self, o: Dual) -> Dual {
        Dual {
            v: self.v * o.v,
            dx: self.dx * o.v + self.v * o.dx,
            dy: self.dy * o.v + self.v * o.dy,
        }
    }

    fn div(self, o: Dual) -> Dual {
        let inv = 1.0 / o.v;
        Dual {
            v: self.v * inv,
            dx: (self.dx * o.v - self.v * o.dx) * inv * inv,
            dy: (self.dy * o.v - self.v * o.dy) * inv * inv,
        }
    }

    fn powf(self, o: Dual) -> Dual {
        // Constant integer exponents are common and must work for negative bases.
        if o.dx == 0.0 && o.dy == 0.0 {
            let n = o.v;
            let f = self.v.powf(n);
            let df = if n == 0.0 { 0.0 } else { n * self.v.powf(n - 1.0) };
            return self.chain(f, df);
        }
        let f = self.v.powf(o.v);
        let ln = self.v.ln();
        Dual {
            v: f,
            dx: f * (o.dx * ln + o.v * self.dx / self.v),
            dy: f * (o.dy * ln + o.v * self.dy / self.v),
        }
    }
}

#[derive(Clone, Debug)]
enum Expr {
    Const(f64),
    X,
    Y,
    R,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Clone, Copy, Debug)]
enum Func {
    Exp,
    Ln,
    Sqrt,
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Atan,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        let name = name.strip_prefix("math::").unwrap_or(name);
        Some(match name {
            "exp" => Func::Exp,
            "ln" | "log" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "tanh" => Func::Tanh,
            "atan" => Func::Atan,
            _ => return None,
        })
    }

    fn apply(self, a: Dual) -> Dual {
        let v = a.v;
        match self {
            Func::Exp => {
                let e = v.exp();
                a.chain(e, e)
            }
            Func::Ln => a.chain(v.ln(), 1.0 / v),
            Func::Sqrt => {
                let s = v.sqrt();
                a.chain(s, 0.5 / s)
            }
            Func::Sin => a.chain(v.sin(), v.cos()),
            Func::Cos => a.chain(v.cos(), -v.sin()),
            Func::Tan => {
                let t = v.tan();
                a.chain(t, 1.0 + t * t)
            }
            Func::Sinh => a.chain(v.sinh(), v.cosh()),
            Func::Cosh => a.chain(v.cosh(), v.sinh()),
            Func::Tanh => {
                let t = v.tanh();
                a.chain(t, 1.0 - t * t)
            }
            Func::Atan => a.chain(v.atan(), 1.0 / (1.0 + v * v)),
        }
    }

    fn apply_f64(self, v: f64) -> f64 {
        match self {
            Func::Exp => v.exp(),
            Func::Ln => v.ln(),
            Func::Sqrt => v.sqrt(),
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Tan => v.tan(),
            Func::Sinh => v.sinh(),
            Func::Cosh => v.cosh(),
            Func::Tanh => v.tanh(),
            Func::Atan => v.atan(),
        }
    }
}

/// An arithmetic expression in `x`, `y`, `r`, parsed once and evaluated with
/// exact first derivatives.
#[derive(Debug)]
pub struct CompiledExpr {
    pub source: String,
    root: Expr,
}

impl CompiledExpr {
    pub fn parse(source: &str) -> Result<Self, GeometryError> {
        let tree = evalexpr::build_operator_tree::<DefaultNumericTypes>(source)
            .map_err(|e| GeometryError::InvalidExpression(format!("{source}: {e}")))?;
        let root = lower(&tree)
            .map_err(|msg| GeometryError::InvalidExpression(format!("{source}: {msg}")))?;
        Ok(CompiledExpr {
            source: source.to_string(),
            root,
        })
    }

    pub fn eval(&self, p: Vec2) -> f64 {
        eval_f64(&self.root, p)
    }

    pub(crate) fn eval_dual(&self, p: Vec2) -> Dual {
        eval_dual(&self.root, p)
    }
}

fn lower(node: &Node<DefaultNumericTypes>) -> Result<Expr, String> {
    let kids = node.children();
    let child = |i: usize| -> Result<Box<Expr>, String> {
        kids.get(i)
            .ok_or_else(|| "malformed expression".to_string())
            .and_then(lower)
            .map(Box::new)
    };
    match node.operator() {
        Operator::RootNode => match kids.len() {
            1 => lower(&kids[0]),
            0 => Err("empty expression".into()),
            _ => Err("multiple statements are not supported".into()),
        },
        Operator::Add => Ok(Expr::Add(child(0)?, child(1)?)),
        Operator::Sub => Ok(Expr::Sub(child(0)?, child(1)?)),
        Operator::Neg => Ok(Expr::Neg(child(0)?)),
        Operator::Mul => Ok(Expr::Mul(child(0)?, child(1)?)),
        Operator::Div => Ok(Expr::Div(child(0)?, child(1)?)),
        Operator::Exp => Ok(Expr::Pow(child(0)?, child(1)?)),
        Operator::Const { value } => match value {
            Value::Float(v) => Ok(Expr::Const(*v)),
            Value::Int(i) => Ok(Expr::Const(*i as f64)),
            other => Err(format!("unsupported constant {other:?}")),
        },
        Operator::VariableIdentifierRead { identifier } => match identifier.as_str() {
            "x" => Ok(Expr::X),
            "y" => Ok(Expr::Y),
            "r" => Ok(Expr::R),
            "pi" | "math::PI" => Ok(Expr::Const(std::f64::consts::PI)),
            "e" | "math::E" => Ok(Expr::Const(std::f64::consts::E)),
            other => Err(format!("unknown variable `{other}`")),
        },
        Operator::FunctionIdentifier { identifier } => {
            let f = Func::from_name(identifier)
                .ok_or_else(|| format!("unknown function `{identifier}`"))?;
            Ok(Expr::Call(f, child(0)?))
        }
        other => Err(format!("unsupported operator {other:?}")),
    }
}

fn eval_f64(e: &Expr, p: Vec2) -> f64 {
    match e {
        Expr::Const(v) => *v,
        Expr::X => p.x,
        Expr::Y => p.y,
        Expr::R => p.norm(),
        Expr::Neg(a) => -eval_f64(a, p),
        Expr::Add(a, b) => eval_f64(a, p) + eval_f64(b, p),
        Expr::Sub(a, b) => eval_f64(a, p) - eval_f64(b, p),
        Expr::Mul(a, b) => eval_f64(a, p) * eval_f64(b, p),
        Expr::Div(a, b) => eval_f64(a, p) / eval_f64(b, p),
        Expr::Pow(a, b) => eval_f64(a, p).powf(eval_f64(b, p)),
        Expr::Call(f, a) => f.apply_f64(eval_f64(a, p)),
    }
}

fn eval_dual(e: &Expr, p: Vec2) -> Dual {
    match e {
        Expr::Const(v) => Dual::constant(*v),
        Expr::X => Dual {
            v: p.x,
            dx: 1.0,
            dy: 0.0,
        },
        Expr::Y => Dual {
            v: p.y,
            dx: 0.0,
            dy: 1.0,
        },
        Expr::R => {
            let r = p.norm();
            if r == 0.0 {
                Dual::constant(0.0)
            } else {
                Dual {
                    v: r,
                    dx: p.x / r,
                    dy: p.y / r,
                }
            }
        }
        Expr::Neg(a) => {
            let a = eval_dual(a, p);
            Dual {
                v: -a.v,
                dx: -a.dx,
                dy: -a.dy,
            }
        }
        Expr::Add(a, b) => eval_dual(a, p).add(eval_dual(b, p)),
        Expr::Sub(a, b) => eval_dual(a, p).sub(eval_dual(b, p)),
        Expr::Mul(a, b) => eval_dual(a, p).mul(eval_dual(b, p)),
        Expr::Div(a, b) => eval_dual(a, p).div(eval_dual(b, p)),
        Expr::Pow(a, b) => eval_dual(a, p).powf(eval_dual(b, p)),
        Expr::Call(f, a) => f.apply(eval_dual(a, p)),
    }
}

/// Serialized form of a gridded conformal factor: `values[j * size + i]` is the
/// sample at `(-extent + i h, -extent + j h)` with `h = 2 extent / (size - 1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub size: usize,
    pub extent: f64,
    pub values: Vec<f64>,
}

#[derive(Debug)]
pub struct GridField {
    size: usize,
    extent: f64,
    step: f64,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(spec: GridSpec) -> Result<Self, GeometryError> {
        if spec.size < 4 {
            return Err(GeometryError::InvalidModel(
                "conformal grid needs at least 4 samples per axis".into(),
            ));
        }
        if spec.values.len() != spec.size * spec.size {
            return Err(GeometryError::InvalidModel(format!(
                "conformal grid has {} values, expected {}",
                spec.values.len(),
                spec.size * spec.size
            )));
        }
        if !(spec.extent > 0.0) {
            return Err(GeometryError::InvalidModel(
                "conformal grid extent must be positive".into(),
            ));
        }
        Ok(GridField {
            size: spec.size,
            extent: spec.extent,
            step: 2.0 * spec.extent / (spec.size - 1) as f64,
            values: spec.values,
        })
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            size: self.size,
            extent: self.extent,
            values: self.values.clone(),
        }
    }

    fn at(&self, i: isize, j: isize) -> f64 {
        let n = self.size as isize;
        let i = i.clamp(0, n - 1) as usize;
        let j = j.clamp(0, n - 1) as usize;
        self.values[j * self.size + i]
    }

    /// Catmull-Rom bicubic interpolation with its exact gradient.
    fn jet(&self, p: Vec2) -> FieldJet {
        let u = (p.x + self.extent) / self.step;
        let v = (p.y + self.extent) / self.step;
        let i0 = u.floor() as isize;
        let j0 = v.floor() as isize;
        let tu = u - i0 as f64;
        let tv = v - j0 as f64;
        let (wu, dwu) = catmull_rom_weights(tu);
        let (wv, dwv) = catmull_rom_weights(tv);
        let mut val = 0.0;
        let mut gx = 0.0;
        let mut gy = 0.0;
        for (b, (&wvb, &dwvb)) in wv.iter().zip(dwv.iter()).enumerate() {
            for (a, (&wua, &dwua)) in wu.iter().zip(dwu.iter()).enumerate() {
                let f = self.at(i0 - 1 + a as isize, j0 - 1 + b as isize);
                val += wua * wvb * f;
                gx += dwua * wvb * f;
                gy += wua * dwvb * f;
            }
        }
        FieldJet {
            value: val,
            gradient: Vec2::new(gx / self.step, gy / self.step),
        }
    }
}

fn catmull_rom_weights(t: f64) -> ([f64; 4], [f64; 4]) {
    let t2 = t * t;
    let t3 = t2 * t;
    let w = [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ];
    let dw = [
        0.5 * (-3.0 * t2 + 4.0 * t - 1.0),
        0.5 * (9.0 * t2 - 10.0 * t),
        0.5 * (-9.0 * t2 + 8.0 * t + 1.0),
        0.5 * (3.0 * t2 - 2.0 * t),
    ];
    (w, dw)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expression_gradient_matches_finite_differences() {
        let f = ConformalField::expression("1 + 0.3*exp(-((x-0.2)^2 + y^2)/0.1) + 0.1*x*y").unwrap();
        let p = Vec2::new(0.13, -0.27);
        let j = f.jet(p);
        let h = 1e-6;
        let gx = (f.value(p + Vec2::new(h, 0.0)) - f.value(p - Vec2::new(h, 0.0))) / (2.0 * h);
        let gy = (f.value(p + Vec2::new(0.0, h)) - f.value(p - Vec2::new(0.0, h))) / (2.0 * h);
        assert!((j.gradient.x - gx).abs() < 1e-8);
        assert!((j.gradient.y - gy).abs() < 1e-8);
        assert!((j.value - f.value(p)).abs() < 1e-15);
    }

    #[test]
    fn math_prefixed_functions_and_radius_variable() {
        let f = ConformalField::expression("math::sqrt(1 + r^2)").unwrap();
        let p = Vec2::new(0.3, 0.4);
        assert!((f.value(p) - (1.25f64).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn rejects_unknown_identifiers() {
        assert!(ConformalField::expression("1 + z").is_err());
        assert!(ConformalField::expression("foo(x)").is_err());
    }

    #[test]
    fn poincare_factor_has_curvature_minus_one_numerically() {
        // Same factor as ConstantCurvature{-1}, but through the generic path.
        let f = ConformalField::expression("(1 - x^2 - y^2)/2").unwrap();
        for p in [Vec2::new(0.0, 0.0), Vec2::new(0.3, -0.2), Vec2::new(-0.5, 0.1)] {
            assert!((f.gauss_curvature(p) + 1.0).abs() < 1e-6, "{p:?}");
        }
    }

    #[test]
    fn grid_field_reproduces_linear_function() {
        let size = 9;
        let extent = 1.0;
        let h = 2.0 * extent / (size - 1) as f64;
        let mut values = Vec::new();
        for j in 0..size {
            for i in 0..size {
                let x = -extent + i as f64 * h;
                let y = -extent + j as f64 * h;
                values.push(1.0 + 0.2 * x - 0.1 * y);
            }
        }
        let g = ConformalField::grid(GridSpec { size, extent, values }).unwrap();
        let p = Vec2::new(0.123, -0.456);
        let j = g.jet(p);
        assert!((j.value - (1.0 + 0.2 * p.x - 0.1 * p.y)).abs() < 1e-12);
        assert!((j.gradient.x - 0.2).abs() < 1e-12);
        assert!((j.gradient.y + 0.1).abs() < 1e-12);
    }
}
