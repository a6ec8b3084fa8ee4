"""Hand-built fixtures shared across the test modules.

The two-index workload is small enough to cost by hand; the expected
numbers asserted against it were computed on paper before the library
existed and are frozen here.
"""
from divtune.model import (
    CandidateIndex,
    DivergentDesign,
    QueryStatement,
    RoutingFunctions,
    SlotOption,
    Table,
    TemplatePlan,
    UpdateStatement,
    Workload,
    scan_id,
)

TBL = "T1"


def two_index_workload() -> Workload:
    q1 = QueryStatement(id="Q1", weight=2.0, templates=(
        TemplatePlan.make("P1", 4.0, {TBL: [
            SlotOption(scan_id(TBL), 10.0),
            SlotOption("I1", 1.0),
            SlotOption("I2", 3.0),
        ]}),
    ))
    shell = QueryStatement(id="U1.q", weight=1.0, templates=(
        TemplatePlan.make("U1.p", 1.0, {TBL: [
            SlotOption(scan_id(TBL), 2.0),
            SlotOption("I1", 1.0),
        ]}),
    ))
    u1 = UpdateStatement.make("U1", 1.0, shell, {"I1": 4.0, "I2": 6.0},
                              base_cost=0.5)
    return Workload(
        tables=(Table(id=TBL),),
        indexes=(CandidateIndex("I1", TBL, 5.0, create_cost=2.0, drop_cost=1.0),
                 CandidateIndex("I2", TBL, 7.0, create_cost=3.0, drop_cost=1.0)),
        queries=(q1,),
        updates=(u1,),
    )


def two_index_design() -> DivergentDesign:
    routing = RoutingFunctions.make({"Q1": [1]},
                                    {1: {"Q1": [2]}, 2: {"Q1": [1]}})
    return DivergentDesign.make([{"I1"}, set()], routing)
