from tamine.abstraction import Interval, Sample
from tamine.facts import Fact, FactInstance, ItemListDB
from tamine.knowledge import ConceptDefinition


def fact(name, value="V", duration="SHORT"):
    return Fact(f"{name}_STATE", value, duration)


def db_of(*rows, subjects=()):
    """Rows are ``(fact name, start, end[, subject])``."""
    insts = []
    for row in rows:
        name, start, end, *rest = row
        subject = rest[0] if rest else "s"
        insts.append(FactInstance(fact(name), subject, Interval(start, end)))
    return ItemListDB.from_instances(insts, subjects or {i.subject_id for i in insts})


def low_high(**kw):
    return ConceptDefinition.from_thresholds("X", [10], ["LOW", "HIGH"], **kw)


def samples(values, times=None, concept="X", subject="s"):
    times = times if times is not None else range(len(values))
    return [Sample(subject, concept, t, float(v)) for t, v in zip(times, values)]
