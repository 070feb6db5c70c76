use core::fmt;

/// The judgement a rule concludes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Judgement {
    Expr,
    /// Attribute lists of resource bodies and class declarations.
    Hash,
    /// Resource bodies `e : H`.
    Res,
    Stmt,
    Manifest,
}

impl Judgement {
    /// Tag used in traces.
    pub fn tag(self) -> &'static str {
        match self {
            Judgement::Expr => "EXPR",
            Judgement::Hash => "HASH",
            Judgement::Res => "RES",
            Judgement::Stmt => "STMT",
            Judgement::Manifest => "MANIFEST",
        }
    }
}

impl fmt::Display for Judgement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

macro_rules! rules {
    ($($judgement:ident: [$($rule:ident),* $(,)?])*) => {
        /// Names of the evaluation rules. A step is justified by a chain of
        /// rules, from the rule concluding the whole step down to an axiom.
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum Rule {
            $($($rule,)*)*
        }

        impl Rule {
            pub const ALL: &'static [Rule] = &[$($(Rule::$rule,)*)*];

            pub fn name(self) -> &'static str {
                match self {
                    $($(Rule::$rule => stringify!($rule),)*)*
                }
            }

            pub fn judgement(self) -> Judgement {
                match self {
                    $($(Rule::$rule => Judgement::$judgement,)*)*
                }
            }
        }
    };
}

rules! {
    Expr: [
        LVar, PVar, TVar, QVar,
        ArithLeft, ArithRight, ArithValue,
        CompLeft, CompRight, CompValueI, CompValueII,
        AndLeft, AndRightI, AndRightII, AndValue,
        OrLeft, OrRightI, OrRightII, OrValue,
        NotStep, NotValueI, NotValueII,
        ArrExp, ArrEleI, ArrEleII,
        HaExp, HEleI, HEleII,
        SControl, SCase, SChooseI, SChooseII, SDefault,
        DeRefExp, DeRefIndex, DeRefArray, DeRefHash, RefRes, DeRefRes,
    ]
    Hash: [ResStepII, ResStepIII]
    Res: [ResTitle, ResStepI]
    Stmt: [
        ExprStep, Expr,
        SeqStep, SeqSkip,
        AssignStep, Assign,
        IfStep, IfT, IfF,
        UnlessStep, UnlessT, UnlessF,
        CaseStep1, CaseStep2, CaseMatch, CaseNoMatch, CaseDone,
        ResStep, ResDecl,
        DefStep, Def,
        IncU, IncD, IncPU, IncPD,
        CDecStep, CDecU, CDecPU, CDecPD,
        ScopeStep, DefScopeStep, ScopeDone, DefScopeDone,
        FailStep, Fail,
    ]
    Manifest: [
        TopScope, MSeqStep, MSeqSkip,
        NodeMatch, NodeNoMatch,
        RDef, CDef, CDefI, CDefP, CDefPI,
    ]
}

impl Rule {
    pub fn from_name(name: &str) -> Option<Rule> {
        Rule::ALL.iter().copied().find(|r| r.name() == name)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        assert_eq!(Rule::ALL.len(), 88);
        for r in Rule::ALL {
            assert_eq!(Rule::from_name(r.name()), Some(*r));
        }
        assert_eq!(Rule::IncPU.name(), "IncPU");
        assert_eq!(Rule::DefScopeDone.judgement(), Judgement::Stmt);
        assert_eq!(Rule::CDefPI.judgement(), Judgement::Manifest);
    }
}
