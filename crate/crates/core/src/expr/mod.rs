//! Words, moment symbols and exact polynomial expressions over them.

mod coeff;
mod poly;
mod symbol;
mod text;
mod word;

pub use coeff::{fmt_rational, parse_rational, rat, ratio, CoeffPoly, PowerProduct, Rational, Unknown};
pub use poly::{substitute_unit, MomentMonomial, PolyExpr};
pub(crate) use poly::fmt_term;
pub use symbol::{canonicalize_symbol, MomentSymbol, Reduced};
pub(crate) use text::Cursor;
pub use text::{parse_coeff, parse_expr, parse_word};
pub use word::{canonicalize_word, Algebra, Letter, SymmetryFlags, Word};
