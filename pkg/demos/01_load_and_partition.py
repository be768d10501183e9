"""
Loading TREC qrels and partitioning them into relevance tiers
=============================================================
"""

# A qrels file is whitespace-separated: query_id, iteration, doc_id, grade.
# The iteration column is historical baggage and is ignored on load.
import tempfile
from pathlib import Path

from gireval import load_qrels, partition_categories

qrels_text = """\
264014 0 doc_a 3
264014 0 doc_b 2
264014 0 doc_c 2
264014 0 doc_d 0
617463 0 doc_e 1
617463 0 doc_f 0
833860 0 doc_g 0
"""

workdir = Path(tempfile.mkdtemp())
qrels_path = workdir / "qrels.txt"
qrels_path.write_text(qrels_text, encoding="utf-8")

qrels = load_qrels(qrels_path)
print(f"loaded {len(qrels)} qrels over {len(qrels.query_ids())} queries")

# Partitioning groups each query's documents by grade: Best is the top
# observed grade (which must be relevant), Acceptable everything relevant
# below it, Unacceptable the grade-0 pool. Query 833860 has no relevant
# document at all, so it cannot anchor any comparison; drop it explicitly.
partition = partition_categories(qrels, drop_unpartitionable=True)
print(f"partitioned {len(partition)} of {len(qrels.query_ids())} queries\n")

for cats in partition:
    print(f"query {cats.query_id}")
    print(f"  best         {[q.doc_id for q in cats.best]}")
    print(f"  acceptable   {[q.doc_id for q in cats.acceptable]}")
    print(f"  unacceptable {[q.doc_id for q in cats.unacceptable]}")

# Note how 264014's Best tier is the two grade-2 docs *plus* doc_a? No:
# Best is only the maximum grade actually observed, so doc_a (grade 3)
# stands alone and the grade-2 docs fall into Acceptable.
assert [q.doc_id for q in partition.get("264014").best] == ["doc_a"]

# For query 617463 the top grade is 1, so grade 1 *is* Best there. The
# tier is relative to the query, not a fixed grade threshold.
assert [q.doc_id for q in partition.get("617463").best] == ["doc_e"]
print("\ntier boundaries are per query, not fixed grade cutoffs")
