//! Name-keyed registry of interchangeable strategy implementations.
//!
//! Each pluggable family (embedding providers, trending sources, standard
//! error estimators) exposes a trait; concrete implementations register a
//! factory under a stable name and are selected at runtime from config,
//! environment variables or CLI flags.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum RegistryError {
    #[error("unknown {family} strategy `{name}` (known: {known})")]
    Unknown {
        family: &'static str,
        name: String,
        known: String,
    },
    #[error("{family} strategy `{name}` is already registered")]
    Duplicate { family: &'static str, name: String },
}

type Factory<C, T, E> = Box<dyn Fn(&C) -> Result<Box<T>, E> + Send + Sync>;

/// Registry mapping names to factories producing boxed trait objects.
///
/// `C` is the configuration handed to a factory, `T` the (unsized) trait the
/// strategies implement and `E` the error a factory may fail with.
pub struct Registry<C, T: ?Sized, E> {
    family: &'static str,
    factories: BTreeMap<String, Factory<C, T, E>>,
}

impl<C, T: ?Sized, E> Registry<C, T, E> {
    pub fn new(family: &'static str) -> Self {
        Self {
            family,
            factories: BTreeMap::new(),
        }
    }

    pub fn family(&self) -> &'static str {
        self.family
    }

    pub fn register<F>(&mut self, name: &str, factory: F) -> Result<(), RegistryError>
    where
        F: Fn(&C) -> Result<Box<T>, E> + Send + Sync + 'static,
    {
        if self.factories.contains_key(name) {
            return Err(RegistryError::Duplicate {
                family: self.family,
                name: name.to_string(),
            });
        }
        self.factories.insert(name.to_string(), Box::new(factory));
        Ok(())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factories.contains_key(name)
    }

    /// Registered names in sorted order.
    pub fn names(&self) -> Vec<&str> {
        self.factories.keys().map(String::as_str).collect()
    }

    /// Instantiate the strategy registered under `name`.
    ///
    /// The outer `Result` reports lookup failures, the inner one whatever the
    /// factory itself returned.
    pub fn create(&self, name: &str, config: &C) -> Result<Result<Box<T>, E>, RegistryError> {
        let factory = self.factories.get(name).ok_or_else(|| RegistryError::Unknown {
            family: self.family,
            name: name.to_string(),
            known: self.names().join(", "),
        })?;
        Ok(factory(config))
    }
}

impl<C, T: ?Sized, E> fmt::Debug for Registry<C, T, E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry")
            .field("family", &self.family)
            .field("names", &self.names())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    trait Greeter {
        fn greet(&self) -> String;
    }

    struct Plain;
    impl Greeter for Plain {
        fn greet(&self) -> String {
            "hello".into()
        }
    }

    struct Loud(usize);
    impl Greeter for Loud {
        fn greet(&self) -> String {
            "HELLO".to_string() + &"!".repeat(self.0)
        }
    }

    fn registry() -> Registry<usize, dyn Greeter, String> {
        let mut r = Registry::new("greeter");
        r.register("plain", |_: &usize| Ok(Box::new(Plain) as Box<dyn Greeter>))
            .unwrap();
        r.register("loud", |n: &usize| {
            if *n > 3 {
                Err("too loud".to_string())
            } else {
                Ok(Box::new(Loud(*n)) as Box<dyn Greeter>)
            }
        })
        .unwrap();
        r
    }

    #[test]
    fn selects_by_name() {
        let r = registry();
        assert_eq!(r.create("plain", &0).unwrap().unwrap().greet(), "hello");
        assert_eq!(r.create("loud", &2).unwrap().unwrap().greet(), "HELLO!!");
        assert_eq!(r.names(), vec!["loud", "plain"]);
    }

    #[test]
    fn factory_errors_pass_through() {
        let r = registry();
        assert!(matches!(r.create("loud", &9), Ok(Err(ref e)) if e == "too loud"));
    }

    #[test]
    fn unknown_and_duplicate_names() {
        let mut r = registry();
        match r.create("quiet", &0) {
            Err(RegistryError::Unknown { name, known, .. }) => {
                assert_eq!(name, "quiet");
                assert_eq!(known, "loud, plain");
            }
            other => panic!("unexpected: {:?}", other.map(|_| ())),
        }
        let dup = r.register("plain", |_: &usize| Ok(Box::new(Plain) as Box<dyn Greeter>));
        assert!(matches!(dup, Err(RegistryError::Duplicate { .. })));
    }
}
