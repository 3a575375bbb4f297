from __future__ import annotations

import pytest

from rbacv import Policy, close_roles, make_policy, validate_policy

UNIVERSITY_USERS = ["Sam", "David", "Mary", "John", "James"]
UNIVERSITY_ROLES = ["Student", "Instructor", "TA", "Chair", "Dean", "Secretary"]
UNIVERSITY_RECORDS = ["REC1", "REC2", "REC3", "REC4", "REC5", "REC6", "REC7"]
UNIVERSITY_ASSIGNMENTS = [
    ("Sam", "Student"),
    ("David", "TA"),
    ("Mary", "Secretary"),
    ("John", "Instructor"),
    ("David", "Instructor"),
    ("James", "Chair"),
    ("John", "Dean"),
]
UNIVERSITY_IMPLICATIONS = [
    ("TA", "Student"),
    ("Chair", "Instructor"),
    ("Dean", "Instructor"),
]
UNIVERSITY_PERMISSIONS = [
    ("Student", "REC1"),
    ("Student", "REC2"),
    ("TA", "REC3"),
    ("Instructor", "REC4"),
    ("Instructor", "REC5"),
    ("Chair", "REC6"),
    ("Dean", "REC7"),
    ("Secretary", "REC3"),
]

UNIVERSITY_POLICY_TEXT = """\
# university example
users Sam David Mary John James
roles Student Instructor TA Chair Dean Secretary
records REC1 REC2 REC3 REC4 REC5 REC6 REC7
assign Sam Student
assign David TA
assign Mary Secretary
assign John Instructor
assign David Instructor
assign James Chair
assign John Dean
implies TA Student
implies Chair Instructor
implies Dean Instructor
permit Student REC1
permit Student REC2
permit TA REC3
permit Instructor REC4
permit Instructor REC5
permit Chair REC6
permit Dean REC7
permit Secretary REC3
"""

# Recomputed by an independent triple loop over the facts above before the
# checks were written; tests must never derive these from library code.
EXPECTED_ACCESS = {
    ("Sam", "REC1"), ("Sam", "REC2"),
    ("David", "REC1"), ("David", "REC2"), ("David", "REC3"),
    ("David", "REC4"), ("David", "REC5"),
    ("Mary", "REC3"),
    ("John", "REC4"), ("John", "REC5"), ("John", "REC7"),
    ("James", "REC4"), ("James", "REC5"), ("James", "REC6"),
}


def university_policy(implications: bool = True) -> Policy:
    return make_policy(
        UNIVERSITY_USERS,
        UNIVERSITY_ROLES,
        UNIVERSITY_RECORDS,
        UNIVERSITY_ASSIGNMENTS,
        UNIVERSITY_IMPLICATIONS if implications else [],
        UNIVERSITY_PERMISSIONS,
    )


@pytest.fixture(scope="session")
def university():
    return validate_policy(university_policy())


@pytest.fixture(scope="session")
def university_closed(university):
    return close_roles(university)


@pytest.fixture(scope="session")
def university_closed_no_implications():
    return close_roles(validate_policy(university_policy(implications=False)))
