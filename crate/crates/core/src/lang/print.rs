//! Canonical text rendering; the parsers accept everything printed here.

use std::fmt;

use super::ast::{Annotations, Command, Model, ModuleDef};

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {} -> {}:", self.label, self.guard, self.rate)?;
        if self.updates.is_empty() {
            f.write_str("true")?;
        }
        for (i, u) in self.updates.iter().enumerate() {
            if i > 0 {
                f.write_str(" &")?;
            }
            write!(f, "({}' = {})", u.var, u.value)?;
        }
        f.write_str(";")
    }
}

impl fmt::Display for ModuleDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "module {}", self.name)?;
        for v in &self.variables {
            writeln!(f, "   {} : [{}..{}] init {};", v.name, v.lower, v.upper, v.init)?;
        }
        if !self.variables.is_empty() && !self.commands.is_empty() {
            writeln!(f)?;
        }
        for c in &self.commands {
            writeln!(f, "   {c}")?;
        }
        f.write_str("endmodule")
    }
}

impl fmt::Display for Annotations {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "annotations {} : {}", self.module, self.kind)?;
        for (label, role) in &self.roles {
            writeln!(f, "   {label} : {role};")?;
        }
        f.write_str("endannotations")
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for m in &self.modules {
            writeln!(f, "{m}\n")?;
        }
        for a in &self.annotations {
            writeln!(f, "{a}\n")?;
        }
        for (name, labels) in &self.label_sets {
            writeln!(f, "labelset {name} = {{{}}};", labels.join(", "))?;
        }
        if !self.label_sets.is_empty() {
            writeln!(f)?;
        }
        for c in &self.compositions {
            writeln!(f, "{} {} = {};", c.kind.keyword(), c.name, c.expr)?;
        }
        Ok(())
    }
}
