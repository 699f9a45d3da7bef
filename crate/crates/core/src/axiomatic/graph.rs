use std::fmt;
use std::sync::OnceLock;

use crate::litmus::Value;
use crate::program::FinalState;
use crate::relation::{restrict, Carrier, EventId, EventSet, Relation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventKind {
    Init,
    Read,
    Write,
    Fence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Tags {
    pub release: bool,
    pub acquire: bool,
    pub rmw: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Event {
    pub id: EventId,
    /// `None` for initialisation events.
    pub thread: Option<usize>,
    pub kind: EventKind,
    pub location: Option<String>,
    pub value: Option<Value>,
    pub tags: Tags,
    /// Zero-based position among its thread's events.
    pub index: usize,
}

impl Event {
    pub fn is_read(&self) -> bool {
        self.kind == EventKind::Read
    }

    /// Init events count as writes.
    pub fn is_write(&self) -> bool {
        matches!(self.kind, EventKind::Write | EventKind::Init)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventClass {
    R,
    W,
    F,
    Rls,
    Acq,
    Rmw,
}

impl EventClass {
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "R" => EventClass::R,
            "W" => EventClass::W,
            "F" => EventClass::F,
            "Rls" => EventClass::Rls,
            "Acq" => EventClass::Acq,
            "RMW" => EventClass::Rmw,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            EventClass::R => "R",
            EventClass::W => "W",
            EventClass::F => "F",
            EventClass::Rls => "Rls",
            EventClass::Acq => "Acq",
            EventClass::Rmw => "RMW",
        }
    }

    fn contains(self, e: &Event) -> bool {
        match self {
            EventClass::R => e.is_read(),
            EventClass::W => e.is_write(),
            EventClass::F => e.kind == EventKind::Fence,
            EventClass::Rls => e.tags.release,
            EventClass::Acq => e.tags.acquire,
            EventClass::Rmw => e.tags.rmw,
        }
    }
}

macro_rules! builtins {
    ($($variant:ident => $name:literal),* $(,)?) => {
        /// The named relations every graph can derive.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum Builtin { $($variant),* }

        impl Builtin {
            pub const ALL: &'static [Builtin] = &[$(Builtin::$variant),*];

            pub fn name(self) -> &'static str {
                match self { $(Builtin::$variant => $name),* }
            }
        }
    };
}

builtins! {
    Po => "po",
    Poloc => "poloc",
    Co => "co",
    Rf => "rf",
    Fr => "fr",
    Rfe => "rfe",
    Fre => "fre",
    Coe => "coe",
    Fencerel => "fencerel",
    RR => "RR",
    RW => "RW",
    WW => "WW",
    WR => "WR",
    PpoTso => "ppo_tso",
    Dep => "dep",
    Ctrl => "ctrl",
    Rmw => "rmw",
    Loc => "loc",
    Ext => "ext",
    Int => "int",
    Com => "com",
    Ca => "ca",
    Eco => "eco",
}

impl Builtin {
    /// Resolves a relation name; `fence` is accepted for `fencerel`.
    pub fn from_name(name: &str) -> Option<Self> {
        if name == "fence" {
            return Some(Builtin::Fencerel);
        }
        Builtin::ALL.iter().copied().find(|b| b.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown relation `{0}`")]
pub struct UnknownRelation(pub String);

/// Events plus the base relations chosen by enumeration. Derived relations
/// are computed on first use and cached.
#[derive(Clone)]
pub struct ExecutionGraph {
    pub events: Vec<Event>,
    pub thread_names: Vec<String>,
    pub po: Relation,
    pub co: Relation,
    pub rf: Relation,
    pub dep: Relation,
    pub ctrl: Relation,
    pub rmw: Relation,
    pub final_state: FinalState,
    cache: Vec<OnceLock<Relation>>,
}

impl fmt::Debug for ExecutionGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExecutionGraph")
            .field(
                "events",
                &self.events.iter().map(|e| self.label(e.id)).collect::<Vec<_>>(),
            )
            .field("po", &self.po)
            .field("co", &self.co)
            .field("rf", &self.rf)
            .field("dep", &self.dep)
            .field("ctrl", &self.ctrl)
            .field("rmw", &self.rmw)
            .finish()
    }
}

impl ExecutionGraph {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        events: Vec<Event>,
        thread_names: Vec<String>,
        po: Relation,
        co: Relation,
        rf: Relation,
        dep: Relation,
        ctrl: Relation,
        rmw: Relation,
        final_state: FinalState,
    ) -> Self {
        ExecutionGraph {
            events,
            thread_names,
            po,
            co,
            rf,
            dep,
            ctrl,
            rmw,
            final_state,
            cache: (0..Builtin::ALL.len()).map(|_| OnceLock::new()).collect(),
        }
    }

    pub fn carrier(&self) -> Carrier {
        self.po.carrier()
    }

    pub fn set(&self, class: EventClass) -> EventSet {
        let ids = self.events.iter().filter(|e| class.contains(e)).map(|e| e.id);
        EventSet::from_ids(self.carrier(), ids).expect("event ids within carrier")
    }

    pub fn init_events(&self) -> EventSet {
        let ids = self.events.iter().filter(|e| e.kind == EventKind::Init).map(|e| e.id);
        EventSet::from_ids(self.carrier(), ids).expect("event ids within carrier")
    }

    /// Short name such as `a1` (thread `A`, first event) or `I_x`.
    pub fn name(&self, id: EventId) -> String {
        let e = &self.events[id];
        match e.thread {
            None => format!("I_{}", e.location.as_deref().unwrap_or("?")),
            Some(t) => {
                let base = self.thread_names[t].to_lowercase();
                let sep = if base.ends_with(|c: char| c.is_ascii_digit()) {
                    "."
                } else {
                    ""
                };
                format!("{base}{sep}{}", e.index + 1)
            }
        }
    }

    /// Label such as `Wa x=1`, `Racq b y=0`, `Fa` or `I x=0`.
    pub fn label(&self, id: EventId) -> String {
        let e = &self.events[id];
        let thread = e.thread.map(|t| self.thread_names[t].to_lowercase());
        let access = match (&e.location, e.value) {
            (Some(l), Some(v)) => format!(" {l}={v}"),
            _ => String::new(),
        };
        let kind = match e.kind {
            EventKind::Init => "I",
            EventKind::Read => "R",
            EventKind::Write => "W",
            EventKind::Fence => "F",
        };
        let mut tag = String::new();
        if e.tags.release {
            tag.push_str("rel ");
        }
        if e.tags.acquire {
            tag.push_str("acq ");
        }
        if e.tags.rmw {
            tag.push_str("rmw ");
        }
        match thread {
            None => format!("{kind}{access}"),
            Some(t) if tag.is_empty() => format!("{kind}{t}{access}"),
            Some(t) => format!("{kind}{} {t}{access}", tag.trim_end()),
        }
    }

    /// The named relation, computed once per graph.
    pub fn derive(&self, name: &str) -> Result<Relation, UnknownRelation> {
        Builtin::from_name(name)
            .map(|b| self.builtin(b).clone())
            .ok_or_else(|| UnknownRelation(name.to_string()))
    }

    pub fn builtin(&self, b: Builtin) -> &Relation {
        self.cache[b as usize].get_or_init(|| self.compute(b))
    }

    fn restricted(&self, from: EventClass, r: &Relation, to: EventClass) -> Relation {
        restrict(&self.set(from), r, &self.set(to)).expect("same carrier")
    }

    fn compute(&self, b: Builtin) -> Relation {
        let c = self.carrier();
        let ok = |r: Result<Relation, _>| r.expect("relations of one graph share a carrier");
        match b {
            Builtin::Po => self.po.clone(),
            Builtin::Co => self.co.clone(),
            Builtin::Rf => self.rf.clone(),
            Builtin::Dep => self.dep.clone(),
            Builtin::Ctrl => self.ctrl.clone(),
            Builtin::Rmw => self.rmw.clone(),
            Builtin::Loc => Relation::from_fn(c, |a, b| {
                let (ea, eb) = (&self.events[a], &self.events[b]);
                ea.location.is_some() && ea.location == eb.location
            }),
            Builtin::Int => Relation::from_fn(c, |a, b| self.events[a].thread == self.events[b].thread),
            Builtin::Ext => Relation::from_fn(c, |a, b| self.events[a].thread != self.events[b].thread),
            Builtin::Poloc => ok(self.po.intersect(self.builtin(Builtin::Loc))),
            Builtin::Fr => ok(self.rf.inverse().compose(&self.co)),
            Builtin::Rfe => ok(self.rf.intersect(self.builtin(Builtin::Ext))),
            Builtin::Fre => ok(self.builtin(Builtin::Fr).intersect(self.builtin(Builtin::Ext))),
            Builtin::Coe => ok(self.co.intersect(self.builtin(Builtin::Ext))),
            Builtin::Fencerel => {
                let fences = self.set(EventClass::F).identity();
                ok(ok(self.po.compose(&fences)).compose(&self.po))
            }
            Builtin::RR => self.restricted(EventClass::R, &self.po, EventClass::R),
            Builtin::RW => self.restricted(EventClass::R, &self.po, EventClass::W),
            Builtin::WW => self.restricted(EventClass::W, &self.po, EventClass::W),
            Builtin::WR => self.restricted(EventClass::W, &self.po, EventClass::R),
            Builtin::PpoTso => {
                ok(ok(self.builtin(Builtin::RR).union(self.builtin(Builtin::RW))).union(self.builtin(Builtin::WW)))
            }
            Builtin::Com => ok(ok(self.co.union(&self.rf)).union(self.builtin(Builtin::Fr))),
            Builtin::Ca => ok(self.co.union(self.builtin(Builtin::Fr))),
            Builtin::Eco => self.builtin(Builtin::Com).transitive_closure(),
        }
    }

    /// The write an event reads from.
    pub fn rf_source(&self, read: EventId) -> Option<EventId> {
        (0..self.events.len()).find(|&w| self.rf.contains(w, read))
    }

    pub fn find(&self, name: &str) -> Option<EventId> {
        (0..self.events.len()).find(|&id| self.name(id) == name)
    }
}
