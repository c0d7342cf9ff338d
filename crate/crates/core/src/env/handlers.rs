//! Built-in tool handlers. Every handler is a pure function of its arguments
//! and the session's [`WorldState`].

use serde_json::{Map, Value};

pub const HANDLER_IDS: &[&str] = &[
    "calculator",
    "weather",
    "unit_convert",
    "dictionary",
    "todo_add",
    "todo_list",
];

/// Per-session mutable state for the stateful tools.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WorldState {
    pub todos: Vec<String>,
}

pub(crate) fn dispatch(
    handler_id: &str,
    args: &Map<String, Value>,
    world: &mut WorldState,
) -> Result<String, String> {
    match handler_id {
        "calculator" => {
            let expr = str_arg(args, "expr")?;
            evaluate_expression(expr).map(format_number)
        }
        "weather" => weather(str_arg(args, "city")?, str_arg(args, "day")?),
        "unit_convert" => {
            let value = args
                .get("value")
                .and_then(Value::as_f64)
                .ok_or("argument `value` must be a number")?;
            let from = str_arg(args, "from")?;
            let to = str_arg(args, "to")?;
            convert(value, from, to).map(|v| format_number((v * 1e4).round() / 1e4))
        }
        "dictionary" => {
            let word = str_arg(args, "word")?.trim().to_lowercase();
            DICTIONARY
                .iter()
                .find(|(w, _)| *w == word)
                .map(|(_, def)| def.to_string())
                .ok_or_else(|| format!("no entry for \"{word}\""))
        }
        "todo_add" => {
            let item = str_arg(args, "item")?.trim();
            if item.is_empty() {
                return Err("argument `item` must not be empty".into());
            }
            world.todos.push(item.to_string());
            Ok(format!("ok, {} item(s) pending", world.todos.len()))
        }
        "todo_list" => {
            if world.todos.is_empty() {
                Ok("the todo list is empty".into())
            } else {
                Ok(world.todos.join(", "))
            }
        }
        other => Err(format!("no handler named \"{other}\"")),
    }
}

fn str_arg<'a>(args: &'a Map<String, Value>, name: &str) -> Result<&'a str, String> {
    args.get(name)
        .and_then(Value::as_str)
        .ok_or_else(|| format!("argument `{name}` must be a string"))
}

pub(crate) fn format_number(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else {
        x.to_string()
    }
}

const CITIES: &[&str] = &["paris", "london", "tokyo", "cairo", "oslo", "lima"];
const DAYS: &[&str] = &[
    "monday",
    "tuesday",
    "wednesday",
    "thursday",
    "friday",
    "saturday",
    "sunday",
];
const CONDITIONS: &[&str] = &["sunny", "cloudy", "rainy", "windy", "snowy"];

fn weather(city: &str, day: &str) -> Result<String, String> {
    let city = city.trim().to_lowercase();
    let day = day.trim().to_lowercase();
    let ci = CITIES
        .iter()
        .position(|c| *c == city)
        .ok_or_else(|| format!("unknown city \"{city}\""))?;
    let di = DAYS
        .iter()
        .position(|d| *d == day)
        .ok_or_else(|| format!("unknown day \"{day}\""))?;
    Ok(CONDITIONS[(2 * ci + di) % CONDITIONS.len()].to_string())
}

fn convert(value: f64, from: &str, to: &str) -> Result<f64, String> {
    let from = from.trim().to_lowercase();
    let to = to.trim().to_lowercase();
    if let (Some(a), Some(b)) = (temperature_unit(&from), temperature_unit(&to)) {
        let celsius = if a { value } else { (value - 32.0) * 5.0 / 9.0 };
        return Ok(if b { celsius } else { celsius * 9.0 / 5.0 + 32.0 });
    }
    let (qa, fa) = linear_unit(&from).ok_or_else(|| format!("unknown unit \"{from}\""))?;
    let (qb, fb) = linear_unit(&to).ok_or_else(|| format!("unknown unit \"{to}\""))?;
    if qa != qb {
        return Err(format!("cannot convert {from} to {to}"));
    }
    Ok(value * fa / fb)
}

/// `Some(true)` for Celsius, `Some(false)` for Fahrenheit.
fn temperature_unit(unit: &str) -> Option<bool> {
    match unit {
        "c" => Some(true),
        "f" => Some(false),
        _ => None,
    }
}

fn linear_unit(unit: &str) -> Option<(&'static str, f64)> {
    Some(match unit {
        "m" => ("length", 1.0),
        "km" => ("length", 1000.0),
        "mi" => ("length", 1609.344),
        "ft" => ("length", 0.3048),
        "kg" => ("mass", 1.0),
        "g" => ("mass", 0.001),
        "lb" => ("mass", 0.45359237),
        _ => return None,
    })
}

const DICTIONARY: &[(&str, &str)] = &[
    ("ephemeral", "lasting for a very short time"),
    ("ubiquitous", "present or found everywhere"),
    ("gregarious", "fond of company; sociable"),
    ("laconic", "using very few words"),
    ("benevolent", "well meaning and kindly"),
    ("candid", "truthful and straightforward; frank"),
    ("meticulous", "showing great attention to detail"),
    ("resilient", "able to recover quickly from difficulty"),
];

/// Evaluates `+ - * /` with parentheses and unary signs over decimal literals.
pub fn evaluate_expression(expr: &str) -> Result<f64, String> {
    let mut p = ExprParser {
        src: expr.as_bytes(),
        pos: 0,
    };
    let value = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(format!(
            "unexpected character '{}' at position {}",
            p.src[p.pos] as char, p.pos
        ));
    }
    if !value.is_finite() {
        return Err("result is not finite".into());
    }
    Ok(value)
}

struct ExprParser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl ExprParser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<f64, String> {
        let mut acc = self.term()?;
        while let Some(op @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            acc = if op == b'+' { acc + rhs } else { acc - rhs };
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<f64, String> {
        let mut acc = self.factor()?;
        while let Some(op @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.factor()?;
            if op == b'*' {
                acc *= rhs;
            } else if rhs == 0.0 {
                return Err("division by zero".into());
            } else {
                acc /= rhs;
            }
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<f64, String> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(-self.factor()?)
            }
            Some(b'+') => {
                self.pos += 1;
                self.factor()
            }
            Some(b'(') => {
                self.pos += 1;
                let v = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err("missing ')'".into());
                }
                self.pos += 1;
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.')
                {
                    self.pos += 1;
                }
                let lit = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                lit.parse::<f64>()
                    .map_err(|_| format!("bad number \"{lit}\""))
            }
            Some(c) => Err(format!(
                "unexpected character '{}' at position {}",
                c as char, self.pos
            )),
            None => Err("unexpected end of expression".into()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Expected values computed independently with Python's `eval`.
    #[test]
    fn expression_values_match_reference_evaluator() {
        let cases = [
            ("2+3*4", 14.0),
            ("(7-2)*6", 30.0),
            ("100/8", 12.5),
            ("3*3*3-1", 26.0),
            ("45/9+1", 6.0),
            ("(12+8)/4", 5.0),
            ("-2*(3+-4)", 2.0),
            ("1.5*4-0.25", 5.75),
            ("2-3-4", -5.0),
            ("64/4/2", 8.0),
        ];
        for (expr, want) in cases {
            assert_eq!(evaluate_expression(expr).unwrap(), want, "{expr}");
        }
    }

    #[test]
    fn expression_errors() {
        assert!(evaluate_expression("").is_err());
        assert!(evaluate_expression("1/0").is_err());
        assert!(evaluate_expression("(1+2").is_err());
        assert!(evaluate_expression("2 x 3").is_err());
        assert!(evaluate_expression("1..2").is_err());
    }

    #[test]
    fn numbers_render_without_trailing_zero() {
        assert_eq!(format_number(14.0), "14");
        assert_eq!(format_number(12.5), "12.5");
        assert_eq!(format_number(-0.0), "0");
    }

    #[test]
    fn conversions() {
        let mut w = WorldState::default();
        let mut call = |from: &str, to: &str, value: f64| {
            let mut args = Map::new();
            args.insert("value".into(), value.into());
            args.insert("from".into(), from.into());
            args.insert("to".into(), to.into());
            dispatch("unit_convert", &args, &mut w)
        };
        assert_eq!(call("km", "mi", 10.0).unwrap(), "6.2137");
        assert_eq!(call("c", "f", 100.0).unwrap(), "212");
        assert_eq!(call("f", "c", 50.0).unwrap(), "10");
        assert!(call("kg", "km", 1.0).is_err());
    }

    #[test]
    fn todo_state_accumulates() {
        let mut w = WorldState::default();
        let empty = Map::new();
        assert_eq!(
            dispatch("todo_list", &empty, &mut w).unwrap(),
            "the todo list is empty"
        );
        let mut args = Map::new();
        args.insert("item".into(), "milk".into());
        assert_eq!(
            dispatch("todo_add", &args, &mut w).unwrap(),
            "ok, 1 item(s) pending"
        );
        assert_eq!(dispatch("todo_list", &empty, &mut w).unwrap(), "milk");
    }
}
