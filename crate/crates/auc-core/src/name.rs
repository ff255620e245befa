//! Namespaced symbolic identifiers for sketch nodes and edges.
//!
//! A name is a string path plus a disambiguating index. Corpus names all use
//! index 0 and display as the bare path; the index only comes into play when a
//! mechanical construction (composition transport, arrow-functor freshening)
//! needs a free variant of an existing name.

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Name {
    pub path: String,
    pub index: u32,
}

impl Name {
    pub fn new(path: impl Into<String>) -> Self {
        Name { path: path.into(), index: 0 }
    }

    pub fn with_index(path: impl Into<String>, index: u32) -> Self {
        Name { path: path.into(), index }
    }

    /// The copy-renaming used by the arrow context: `X` becomes `X#0` / `X#1`.
    ///
    /// Identity-edge names stay attached to their node: `s(X)` becomes
    /// `s(X#0)`, never `s(X)#0`.
    pub fn copy_suffix(&self, side: u8) -> Name {
        if let Some(inner) = self.path.strip_prefix("s(").and_then(|r| r.strip_suffix(')')) {
            return Name { path: format!("s({inner}#{side})"), index: self.index };
        }
        Name { path: format!("{}#{}", self.path, side), index: self.index }
    }

    /// The θ-renaming used by the arrow context: `u` becomes `theta(u)`.
    pub fn theta(&self) -> Name {
        Name { path: format!("theta({})", self.path), index: self.index }
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.index == 0 {
            write!(f, "{}", self.path)
        } else {
            write!(f, "{}~{}", self.path, self.index)
        }
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

fn parse_name(s: &str) -> Name {
    if let Some((path, idx)) = s.rsplit_once('~') {
        if let Ok(index) = idx.parse::<u32>() {
            return Name { path: path.to_string(), index };
        }
    }
    Name::new(s)
}

impl Serialize for Name {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Name {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if s.is_empty() {
            return Err(de::Error::custom("empty identifier"));
        }
        Ok(parse_name(&s))
    }
}

macro_rules! id_newtype {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(
            Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        pub struct $name(pub Name);

        impl $name {
            pub fn new(path: impl Into<String>) -> Self {
                $name(Name::new(path))
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(parse_name(s))
            }
        }
    };
}

id_newtype!(
    /// Identifier of a sketch node.
    NodeId
);
id_newtype!(
    /// Identifier of a sketch edge.
    EdgeId
);

impl NodeId {
    /// Canonical name of the identity edge on this node.
    pub fn identity_edge(&self) -> EdgeId {
        EdgeId(Name { path: format!("s({})", self.0), index: 0 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_round_trip() {
        for n in [Name::new("X"), Name::with_index("theta(x)#0", 3)] {
            assert_eq!(parse_name(&n.to_string()), n);
        }
    }

    #[test]
    fn identity_edge_naming_tracks_node_renaming() {
        let x = NodeId::new("X");
        assert_eq!(x.identity_edge(), EdgeId::new("s(X)"));
        let x0 = NodeId(x.0.copy_suffix(0));
        assert_eq!(x0.identity_edge(), EdgeId::new("s(X#0)"));
    }
}
