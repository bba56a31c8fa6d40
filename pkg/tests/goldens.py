"""Frozen golden values, computed by independent oracle scripts before the
engine was built (plug-in entropies by hand, chi-squared from expected counts,
Fisher via Fraction-exact hypergeometric enumeration). Do not edit to make
tests pass; regenerate only by re-running the oracles in tests/oracles.py."""

# Published joint counts: sex (Female, Male) x relationship
RELATIONSHIP_CATS = ("Husband", "Not-in-family", "Other-relative", "Own-child", "Unmarried", "Wife")
SEX_CATS = ("Female", "Male")
SEX_RELATIONSHIP_COUNTS = (
    (1, 5870, 689, 3376, 3928, 2328),      # Female
    (19715, 6713, 817, 4205, 1197, 3),     # Male
)
ADULT_N = 48842
SEX_TOTALS = (16192, 32650)

# Plug-in statistics of that joint (independent oracle, natural log)
SEX_RELATIONSHIP_MI_NATS = 0.271609
SEX_RELATIONSHIP_NMI_ARITHMETIC = 0.255147
SEX_RELATIONSHIP_NMI_GEOMETRIC = 0.278823
SEX_RELATIONSHIP_CHI2 = 20416.778774
SEX_RELATIONSHIP_CRAMERS_V = 0.646542222609

# Published NMI scan values (rows: candidate; cols alignment in test)
NMI_TABLE = {
    ("sex", "workclass"): 0.013,
    ("sex", "education"): 0.005,
    ("sex", "marital-status"): 0.112,
    ("sex", "occupation"): 0.099,
    ("sex", "relationship"): 0.271,
    ("sex", "native-country"): 0.002,
    ("race", "workclass"): 0.007,
    ("race", "education"): 0.001,
    ("race", "marital-status"): 0.012,
    ("race", "occupation"): 0.012,
    ("race", "relationship"): 0.017,
    ("race", "native-country"): 0.094,
}
NMI_TOLERANCE = 0.03

# Published race x {Laos, United-States} column counts
RACE_CATS = ("Amer-Indian-Eskimo", "Asian-Pac-Islander", "Black", "Other", "White")
LAOS_COUNTS = (0, 23, 0, 0, 0)
US_COUNTS = (452, 429, 4269, 189, 38493)

# Fraction-exact Fisher two-sided p-values (hypergeometric enumeration oracle)
FISHER_DIAG_23 = 2.429121062858555e-13        # [[23, 0], [0, 23]]
FISHER_LAOS_API = 1.140311772114915e-46       # [[23, 429], [0, 43403]]
# expected (Asian-Pac-Islander, Laos) cell in that 2x2 — triggers the Fisher branch
LAOS_EXPECTED_MIN_CELL = 0.23705392771633793

WIFE_FEMALE_PURITY = 0.9987129987129987       # 2328 / 2331
SIGMOID_1_5 = 0.8175744761936437

# Population NMI of the confounder preset (exact enumeration over CPTs:
# U~Ber(0.5); P(A=a1|u1)=P(P=p1|u1)=0.9, =0.1 given u0), arithmetic normalization
CONFOUNDER_POPULATION_NMI = 0.319923

# Same enumeration at strength 0.7/0.7 (vocabulary preset): association well
# below any proxy threshold
VOCABULARY_POPULATION_NMI = 0.018546

# P(condition present | support-group member) by Bayes:
# 0.3*0.85 / (0.3*0.85 + 0.7*0.02)
HUNTINGTON_MEMBER_PURITY = 0.9479553903345724

# Bayes-optimal balanced accuracy predicting sex from the school preset's
# candidate columns: the years>=30 cut recovers the cohort exactly, and the
# cohort carries sex at 0.975 in both directions
SCHOOL_BAYES_BALANCED_ACCURACY = 0.975
