"""多面体锥与多面体代数"""

from .cone import NEGATIVE, POSITIVE, PolyCone, canonical_rows, cone_intersection, cone_sum
from .dd import fourier_motzkin, hrep_to_vrep, vrep_to_hrep
from .polyhedron import Polyhedron
from .sampling import cross_section_samples, random_unit_vectors
