//! Line-oriented text formats for lattices, co-quantales, spaces,
//! structures and theories.
//!
//! A file is a sequence of blocks, each opened by a header directive
//! (`@lattice`, `@coquantale`, `@space`, `@structure`, `@theory`) and
//! followed by body directives. `#` starts a comment.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::builtins::builtin;
use crate::coquantale::CoQuantale;
use crate::formula::{parse_formula, parse_modulus, tuple_index, tuples, Language, Modulus, Signature};
use crate::lattice::{Elem, FiniteLattice};
use crate::semantics::{Condition, LStructure, Theory};
use crate::space::ContinuitySpace;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {msg}")]
pub struct TextError {
    pub line: usize,
    pub msg: String,
}

fn err<T>(line: usize, msg: impl ToString) -> Result<T, TextError> {
    Err(TextError {
        line,
        msg: msg.to_string(),
    })
}

/// Everything loaded so far, by name.
#[derive(Debug, Clone, Default)]
pub struct Workspace {
    pub lattices: BTreeMap<String, FiniteLattice>,
    pub coquantales: BTreeMap<String, Arc<CoQuantale>>,
    pub spaces: BTreeMap<String, ContinuitySpace>,
    pub structures: BTreeMap<String, LStructure>,
    pub theories: BTreeMap<String, Theory>,
    /// Structure names in load order.
    pub structure_order: Vec<String>,
}

struct Line<'a> {
    no: usize,
    words: Vec<&'a str>,
    /// Text after the directive and its first `skip` words.
    raw: &'a str,
}

impl Line<'_> {
    fn rest_after(&self, skip: usize) -> &str {
        let mut s = self.raw.trim_start();
        for _ in 0..=skip {
            s = s.trim_start();
            s = s.find(char::is_whitespace).map_or("", |i| &s[i..]);
        }
        s.trim()
    }
}

impl Workspace {
    pub fn new() -> Self {
        Self::default()
    }

    /// A registered co-quantale, or a builtin spec.
    pub fn coquantale(&self, name: &str) -> Option<Arc<CoQuantale>> {
        self.coquantales
            .get(name)
            .cloned()
            .or_else(|| builtin(name).ok().map(Arc::new))
    }

    pub fn structure(&self, name: &str) -> Option<&LStructure> {
        self.structures.get(name)
    }

    pub fn load_str(&mut self, text: &str) -> Result<(), TextError> {
        let mut block: Vec<Line> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let words: Vec<&str> = content.split_whitespace().collect();
            let line = Line {
                no: i + 1,
                words,
                raw: content,
            };
            if !line.words[0].starts_with('@') {
                return err(line.no, format!("expected a directive, found `{}`", line.words[0]));
            }
            let header = matches!(line.words[0], "@lattice" | "@coquantale" | "@space" | "@structure" | "@theory")
                || (line.words[0] == "@builtin" && block.first().is_none_or(|h| h.words[0] != "@coquantale"));
            if header && !block.is_empty() {
                self.finish(std::mem::take(&mut block))?;
            }
            if block.is_empty() && !header {
                return err(line.no, format!("`{}` outside a block", line.words[0]));
            }
            block.push(line);
        }
        if !block.is_empty() {
            self.finish(block)?;
        }
        Ok(())
    }

    pub fn load_file(&mut self, path: &std::path::Path) -> Result<(), TextError> {
        let text = std::fs::read_to_string(path).map_err(|e| TextError {
            line: 0,
            msg: format!("{}: {e}", path.display()),
        })?;
        self.load_str(&text).map_err(|e| TextError {
            line: e.line,
            msg: format!("{}: {}", path.display(), e.msg),
        })
    }

    fn finish(&mut self, block: Vec<Line>) -> Result<(), TextError> {
        let head = &block[0];
        match head.words[0] {
            "@lattice" => self.finish_lattice(&block),
            "@coquantale" => self.finish_coquantale(&block),
            "@builtin" => {
                let spec = arg(head, 1)?;
                let v = builtin(spec).or_else(|e| err(head.no, e))?;
                self.insert_coquantale(head.no, spec.to_string(), v)
            }
            "@space" => self.finish_space(&block),
            "@structure" => self.finish_structure(&block),
            "@theory" => self.finish_theory(&block),
            other => err(head.no, format!("unknown block `{other}`")),
        }
    }

    fn finish_lattice(&mut self, block: &[Line]) -> Result<(), TextError> {
        let head = &block[0];
        let name = arg(head, 1)?.to_string();
        let mut names: Option<Vec<String>> = None;
        let mut pairs = Vec::new();
        for line in &block[1..] {
            match line.words[0] {
                "@elements" => names = Some(line.words[1..].iter().map(|s| s.to_string()).collect()),
                "@leq" => {
                    let ns = names.as_ref().map_or_else(|| err(line.no, "`@leq` before `@elements`"), Ok)?;
                    let find = |w: &str| {
                        ns.iter().position(|n| n == w).map_or_else(|| err(line.no, format!("unknown element `{w}`")), Ok)
                    };
                    expect_len(line, 3)?;
                    pairs.push((find(line.words[1])?, find(line.words[2])?));
                }
                other => return err(line.no, format!("unexpected `{other}` in a lattice")),
            }
        }
        let names = names.map_or_else(|| err(head.no, "missing `@elements`"), Ok)?;
        let l = FiniteLattice::from_generators(names, &pairs).or_else(|e| err(head.no, e))?;
        if self.lattices.insert(name.clone(), l).is_some() {
            return err(head.no, format!("duplicate lattice `{name}`"));
        }
        Ok(())
    }

    fn insert_coquantale(&mut self, line: usize, name: String, v: CoQuantale) -> Result<(), TextError> {
        if self.coquantales.contains_key(&name) {
            return err(line, format!("duplicate co-quantale `{name}`"));
        }
        self.coquantales.insert(name, Arc::new(v));
        Ok(())
    }

    fn finish_coquantale(&mut self, block: &[Line]) -> Result<(), TextError> {
        let head = &block[0];
        let name = arg(head, 1)?.to_string();
        if let Some(b) = block.get(1).filter(|l| l.words[0] == "@builtin") {
            if block.len() > 2 || head.words.len() > 2 {
                return err(b.no, "`@builtin` takes the whole block");
            }
            let v = builtin(arg(b, 1)?).or_else(|e| err(b.no, e))?;
            return self.insert_coquantale(head.no, name, v);
        }
        if head.words.len() != 4 || head.words[2] != "over" {
            return err(head.no, "expected `@coquantale <name> over <lattice>`");
        }
        let l = self
            .lattices
            .get(head.words[3])
            .map_or_else(|| err(head.no, format!("unknown lattice `{}`", head.words[3])), Ok)?
            .clone();
        let n = l.len();
        let mut add: Vec<Vec<Option<Elem>>> = vec![vec![None; n]; n];
        for line in &block[1..] {
            if line.words[0] != "@add" {
                return err(line.no, format!("unexpected `{}` in a co-quantale", line.words[0]));
            }
            expect_len(line, 4)?;
            let find = |w: &str| l.index_of(w).map_or_else(|| err(line.no, format!("unknown element `{w}`")), Ok);
            let (a, b, c) = (find(line.words[1])?, find(line.words[2])?, find(line.words[3])?);
            for (x, y) in [(a, b), (b, a)] {
                match add[x][y] {
                    Some(old) if old != c => {
                        return err(line.no, format!("conflicting sums for {} + {}", l.name(x), l.name(y)));
                    }
                    _ => add[x][y] = Some(c),
                }
            }
        }
        let mut table = vec![vec![0; n]; n];
        for a in 0..n {
            for b in 0..n {
                table[a][b] = add[a][b].map_or_else(|| err(head.no, format!("missing `@add {} {}`", l.name(a), l.name(b))), Ok)?;
            }
        }
        let v = CoQuantale::new(name.clone(), l, table).or_else(|e| err(head.no, e))?;
        self.insert_coquantale(head.no, name, v)
    }

    fn over(&self, head: &Line) -> Result<Arc<CoQuantale>, TextError> {
        if head.words.len() != 4 || head.words[2] != "over" {
            return err(head.no, format!("expected `{} <name> over <coquantale>`", head.words[0]));
        }
        self.coquantale(head.words[3])
            .map_or_else(|| err(head.no, format!("unknown co-quantale `{}`", head.words[3])), Ok)
    }

    fn finish_space(&mut self, block: &[Line]) -> Result<(), TextError> {
        let head = &block[0];
        let v = self.over(head)?;
        let name = head.words[1].to_string();
        let mut points = None;
        let mut dists = Vec::new();
        for line in &block[1..] {
            match line.words[0] {
                "@points" => points = Some(line),
                "@dist" => dists.push(line),
                other => return err(line.no, format!("unexpected `{other}` in a space")),
            }
        }
        let points = points.map_or_else(|| err(head.no, "missing `@points`"), Ok)?;
        let space = build_space(&v, points, &dists)?;
        if self.spaces.insert(name.clone(), space).is_some() {
            return err(head.no, format!("duplicate space `{name}`"));
        }
        Ok(())
    }

    fn finish_structure(&mut self, block: &[Line]) -> Result<(), TextError> {
        let head = &block[0];
        let v = self.over(head)?;
        let name = head.words[1].to_string();
        let mut universe = None;
        let mut dists = Vec::new();
        let mut sig = Signature::new();
        let mut pred_lines = Vec::new();
        let mut fun_lines = Vec::new();
        let mut const_lines = Vec::new();
        for line in &block[1..] {
            match line.words[0] {
                "@universe" => universe = Some(line),
                "@dist" => dists.push(line),
                "@pred" | "@fun" => {
                    let sym = arg(line, 1)?;
                    let arity: usize = arg(line, 2)?
                        .parse()
                        .or_else(|_| err(line.no, format!("bad arity `{}`", line.words[2])))?;
                    let modulus = match line.words.get(3) {
                        None => Modulus::identity(&v),
                        Some(&"@modulus") => parse_modulus(&line.words[4..], &v).or_else(|e| err(line.no, e))?,
                        Some(w) => return err(line.no, format!("expected `@modulus`, found `{w}`")),
                    };
                    let added = if line.words[0] == "@pred" {
                        sig.add_predicate(sym, arity, modulus)
                    } else {
                        sig.add_function(sym, arity, modulus)
                    };
                    added.or_else(|e| err(line.no, e))?;
                }
                "@predval" => pred_lines.push(line),
                "@funval" => fun_lines.push(line),
                "@const" => {
                    expect_len(line, 3)?;
                    sig.add_constant(line.words[1]).or_else(|e| err(line.no, e))?;
                    const_lines.push(line);
                }
                other => return err(line.no, format!("unexpected `{other}` in a structure")),
            }
        }
        let universe = universe.map_or_else(|| err(head.no, "missing `@universe`"), Ok)?;
        let space = build_space(&v, universe, &dists)?;
        let n = space.len();
        let point = |line: &Line, w: &str| {
            space.index_of(w).map_or_else(|| err(line.no, format!("unknown point `{w}`")), Ok)
        };
        let lang = Language::new(v.clone(), sig).or_else(|e| err(head.no, e))?;

        let mut preds: Vec<Vec<Option<Elem>>> =
            lang.sig.predicates.iter().map(|s| vec![None; n.pow(s.arity as u32)]).collect();
        for line in &pred_lines {
            let p = lang.sig.predicate(arg(line, 1)?).map_or_else(|| err(line.no, format!("undeclared predicate `{}`", line.words[1])), Ok)?;
            let arity = lang.sig.predicates[p].arity;
            expect_len(line, arity + 3)?;
            let args = line.words[2..2 + arity].iter().map(|w| point(line, w)).collect::<Result<Vec<_>, _>>()?;
            let val = line.words[2 + arity];
            let e = v.index_of(val).map_or_else(|| err(line.no, format!("unknown element `{val}`")), Ok)?;
            preds[p][tuple_index(&args, n)] = Some(e);
        }
        let mut funs: Vec<Vec<Option<usize>>> =
            lang.sig.functions.iter().map(|s| vec![None; n.pow(s.arity as u32)]).collect();
        for line in &fun_lines {
            let f = lang.sig.function(arg(line, 1)?).map_or_else(|| err(line.no, format!("undeclared function `{}`", line.words[1])), Ok)?;
            let arity = lang.sig.functions[f].arity;
            expect_len(line, arity + 3)?;
            let args = line.words[2..2 + arity].iter().map(|w| point(line, w)).collect::<Result<Vec<_>, _>>()?;
            funs[f][tuple_index(&args, n)] = Some(point(line, line.words[2 + arity])?);
        }
        let consts = const_lines.iter().map(|l| point(l, l.words[2])).collect::<Result<Vec<_>, _>>()?;

        let complete = |tables: Vec<Vec<Option<usize>>>, names: &[String], kind: &str| {
            tables
                .into_iter()
                .zip(names)
                .map(|(t, sym)| {
                    t.iter()
                        .enumerate()
                        .map(|(i, x)| {
                            x.map_or_else(
                                || {
                                    let arity = (t.len() as f64).log(n as f64).round() as usize;
                                    let args = tuples(n, arity).nth(i).unwrap_or_default();
                                    let shown: Vec<&str> = args.iter().map(|&a| space.point_name(a)).collect();
                                    err(head.no, format!("missing `{kind} {sym} {}`", shown.join(" ")))
                                },
                                Ok,
                            )
                        })
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()
        };
        let pnames: Vec<String> = lang.sig.predicates.iter().map(|s| s.name.clone()).collect();
        let fnames: Vec<String> = lang.sig.functions.iter().map(|s| s.name.clone()).collect();
        let preds = complete(preds, &pnames, "@predval")?;
        let funs = complete(funs, &fnames, "@funval")?;
        let m = LStructure::new(name.clone(), Arc::new(lang), space, preds, funs, consts).or_else(|e| err(head.no, e))?;
        if self.structures.insert(name.clone(), m).is_some() {
            return err(head.no, format!("duplicate structure `{name}`"));
        }
        self.structure_order.push(name);
        Ok(())
    }

    /// `@theory <name> over <structure>`: formulas use that structure's
    /// language.
    fn finish_theory(&mut self, block: &[Line]) -> Result<(), TextError> {
        let head = &block[0];
        if head.words.len() != 4 || head.words[2] != "over" {
            return err(head.no, "expected `@theory <name> over <structure>`");
        }
        let lang = self
            .structures
            .get(head.words[3])
            .map_or_else(|| err(head.no, format!("unknown structure `{}`", head.words[3])), Ok)?
            .lang()
            .clone();
        let mut conditions = Vec::new();
        for line in &block[1..] {
            if line.words[0] != "@condition" {
                return err(line.no, format!("unexpected `{}` in a theory", line.words[0]));
            }
            let name = arg(line, 1)?.to_string();
            let formula = parse_formula(line.rest_after(1), &lang).or_else(|e| err(line.no, e))?;
            conditions.push(Condition { name, formula });
        }
        let t = Theory::new(conditions).or_else(|e| err(head.no, e))?;
        let name = head.words[1].to_string();
        if self.theories.insert(name.clone(), t).is_some() {
            return err(head.no, format!("duplicate theory `{name}`"));
        }
        Ok(())
    }
}

fn arg<'a>(line: &Line<'a>, i: usize) -> Result<&'a str, TextError> {
    line.words
        .get(i)
        .copied()
        .map_or_else(|| err(line.no, format!("`{}` needs more arguments", line.words[0])), Ok)
}

fn expect_len(line: &Line, n: usize) -> Result<(), TextError> {
    if line.words.len() != n {
        return err(line.no, format!("`{}` takes {} arguments, got {}", line.words[0], n - 1, line.words.len() - 1));
    }
    Ok(())
}

/// Missing pairs default to `0` on the diagonal and `top` elsewhere.
fn build_space(v: &Arc<CoQuantale>, points: &Line, dists: &[&Line]) -> Result<ContinuitySpace, TextError> {
    let names: Vec<String> = points.words[1..].iter().map(|s| s.to_string()).collect();
    let n = names.len();
    let mut dist: Vec<Vec<Elem>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { v.zero() } else { v.top() }).collect())
        .collect();
    let mut seen = vec![vec![false; n]; n];
    for line in dists {
        expect_len(line, 4)?;
        let find = |w: &str| names.iter().position(|p| p == w).map_or_else(|| err(line.no, format!("unknown point `{w}`")), Ok);
        let (x, y) = (find(line.words[1])?, find(line.words[2])?);
        if std::mem::replace(&mut seen[x][y], true) {
            return err(line.no, format!("repeated `@dist {} {}`", names[x], names[y]));
        }
        dist[x][y] = v
            .index_of(line.words[3])
            .map_or_else(|| err(line.no, format!("unknown element `{}`", line.words[3])), Ok)?;
    }
    ContinuitySpace::new(v.clone(), names, dist).or_else(|e| err(points.no, e))
}

fn is_builtin(v: &CoQuantale) -> bool {
    builtin(v.name()).is_ok_and(|b| &b == v)
}

/// `@lattice` and `@coquantale` blocks for a non-builtin co-quantale.
pub fn write_coquantale(v: &CoQuantale) -> String {
    let mut out = String::new();
    if is_builtin(v) {
        let _ = writeln!(out, "@builtin {}", v.name());
        return out;
    }
    let lname = format!("{}-lattice", v.name());
    let _ = writeln!(out, "@lattice {lname}");
    let names: Vec<&str> = v.elements().map(|e| v.elem_name(e)).collect();
    let _ = writeln!(out, "@elements {}", names.join(" "));
    for a in v.elements() {
        for b in v.elements() {
            if a != b && v.leq(a, b) {
                let _ = writeln!(out, "@leq {} {}", v.elem_name(a), v.elem_name(b));
            }
        }
    }
    let _ = writeln!(out, "@coquantale {} over {lname}", v.name());
    for a in v.elements() {
        for b in v.elements().filter(|&b| b >= a) {
            let _ = writeln!(out, "@add {} {} {}", v.elem_name(a), v.elem_name(b), v.elem_name(v.add(a, b)));
        }
    }
    out
}

fn write_dists(out: &mut String, s: &ContinuitySpace) {
    let v = s.v();
    for x in 0..s.len() {
        for y in 0..s.len() {
            let default = if x == y { v.zero() } else { v.top() };
            if s.d(x, y) != default {
                let _ = writeln!(out, "@dist {} {} {}", s.point_name(x), s.point_name(y), v.elem_name(s.d(x, y)));
            }
        }
    }
}

pub fn write_space(name: &str, s: &ContinuitySpace) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "@space {name} over {}", s.v().name());
    let _ = writeln!(out, "@points {}", s.points().join(" "));
    write_dists(&mut out, s);
    out
}

fn write_modulus(m: &Modulus, v: &CoQuantale) -> String {
    if m == &Modulus::identity(v) {
        "id".to_string()
    } else {
        m.pairs()
            .map(|(e, d)| format!("{} {}", v.elem_name(e), v.elem_name(d)))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// The structure block, preceded by the co-quantale blocks when `V` is not
/// a builtin.
pub fn write_structure(m: &LStructure) -> String {
    let v = m.v();
    let mut out = String::new();
    if !is_builtin(v) {
        out.push_str(&write_coquantale(v));
    }
    let s = m.space();
    let _ = writeln!(out, "@structure {} over {}", m.name(), v.name());
    let _ = writeln!(out, "@universe {}", s.points().join(" "));
    write_dists(&mut out, s);
    let sig = &m.lang().sig;
    let n = m.len();
    let shown = |args: &[usize]| args.iter().map(|&a| s.point_name(a)).collect::<Vec<_>>().join(" ");
    for (p, sym) in sig.predicates.iter().enumerate() {
        let _ = writeln!(out, "@pred {} {} @modulus {}", sym.name, sym.arity, write_modulus(&sym.modulus, v));
        for args in tuples(n, sym.arity) {
            let _ = writeln!(out, "@predval {} {} {}", sym.name, shown(&args), v.elem_name(m.pred(p, &args)));
        }
    }
    for (f, sym) in sig.functions.iter().enumerate() {
        let _ = writeln!(out, "@fun {} {} @modulus {}", sym.name, sym.arity, write_modulus(&sym.modulus, v));
        for args in tuples(n, sym.arity) {
            let _ = writeln!(out, "@funval {} {} {}", sym.name, shown(&args), s.point_name(m.fun(f, &args)));
        }
    }
    for (c, name) in sig.constants.iter().enumerate() {
        let _ = writeln!(out, "@const {name} {}", s.point_name(m.const_point(c)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SIERPINSKI: &str = "
# two points, one open singleton
@space S over bool2
@points a b
@dist a b 1   # b is far from a
@dist b a 0
";

    #[test]
    fn loads_spaces_with_defaults() {
        let mut ws = Workspace::new();
        ws.load_str(SIERPINSKI).unwrap();
        let s = &ws.spaces["S"];
        assert_eq!((s.d(0, 1), s.d(1, 0), s.d(0, 0)), (1, 0, 0));
        let mut again = Workspace::new();
        again.load_str(&write_space("S", s)).unwrap();
        assert_eq!(&again.spaces["S"], s);
    }

    #[test]
    fn loads_custom_coquantales() {
        let text = "
@lattice three
@elements lo mid hi
@leq lo mid
@leq mid hi
@coquantale max over three
@add lo lo lo
@add lo mid mid
@add lo hi hi
@add mid mid mid
@add mid hi hi
@add hi hi hi
@coquantale c4
@builtin chain:4
";
        let mut ws = Workspace::new();
        ws.load_str(text).unwrap();
        let v = ws.coquantale("max").unwrap();
        assert_eq!(v.len(), 3);
        assert!(v.leq(0, 2));
        assert_eq!(ws.coquantale("c4").unwrap().len(), 5);
        let mut again = Workspace::new();
        again.load_str(&write_coquantale(&v)).unwrap();
        assert_eq!(*again.coquantale("max").unwrap(), *v);
    }

    #[test]
    fn structures_round_trip() {
        let text = "
@structure M over chain:3
@universe p q
@dist p q 2
@dist q p 2
@pred P 1 @modulus id
@predval P p 0
@predval P q 1
@pred R 2 @modulus 0 0 1 0 2 0 3 0
@predval R p p 0
@predval R p q 0
@predval R q p 0
@predval R q q 0
@fun f 1
@funval f p q
@funval f q p
@const c q
@theory T over M
@condition E1 (P p_is_not_a_term)
";
        let mut ws = Workspace::new();
        let e = ws.load_str(text).unwrap_err();
        assert_eq!(e.line, 19, "{e}");
        let open = text.replace("(P p_is_not_a_term)", "(P x0)");
        assert_eq!(Workspace::new().load_str(&open).unwrap_err().line, 18);
        let text = text.replace("p_is_not_a_term", "c");
        let mut ws = Workspace::new();
        ws.load_str(&text).unwrap();
        let m = ws.structure("M").unwrap();
        assert_eq!(m.pred(0, &[1]), 1);
        assert_eq!(m.fun(0, &[0]), 1);
        assert_eq!(ws.theories["T"].len(), 1);
        let mut again = Workspace::new();
        again.load_str(&write_structure(m)).unwrap();
        assert_eq!(again.structure("M").unwrap(), m);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("@space S over bool2\n@points a\n@dist a b 1\n", 3),
            ("@points a\n", 1),
            ("@space S over nowhere\n@points a\n", 1),
            ("@structure M over bool2\n@universe a\n@pred P 1\n", 1),
            ("@space S over bool2\n@points a b\n@dist a b 2\n", 3),
            ("\n\n@lattice L\n@leq a b\n", 4),
        ];
        for (text, line) in cases {
            let e = Workspace::new().load_str(text).unwrap_err();
            assert_eq!(e.line, line, "{text:?}: {e}");
        }
    }
}
