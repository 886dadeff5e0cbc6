example_square = ((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0))
example_l_shape = ((0.0, 0.0), (1.0, 0.0), (1.0, 0.5), (0.5, 0.5), (0.5, 1.0), (0.0, 1.0))
example_triangle = ((0.0, 0.0), (1.0, 0.0), (0.0, 1.0))
example_pentagon = ((0.0, 0.0), (2.0, 0.0), (2.5, 1.0), (1.0, 2.0), (-0.5, 1.0))
example_bowtie = ((0.0, 0.0), (1.0, 1.0), (1.0, 0.0), (0.0, 1.0))
example_degenerate = ((0.0, 0.0), (1.0, 0.0), (0.0, 0.0))
example_domains = [example_square, example_l_shape, example_triangle, example_pentagon]

example_two_triangle_nodes = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
example_two_triangles = [(0, 1, 2), (0, 2, 3)]
example_two_triangle_boundary = [(0, 1), (1, 2), (2, 3), (3, 0)]

example_minimal_config = """
[domain]
preset = unit_square

[model]
preset = classical
chi = 5

[time]
t_end = 0.1
"""

example_heat_config = """
# pure diffusion of a bump
[domain]
preset = unit_square
h = 0.125

[model]
preset = custom
coefficients = pure_diffusion
kappa = 1

[time]
t_end = 0.02
tau0 = 0.005

[initial.u]
kind = gaussian_bump
center = [0.5, 0.5]
width = 0.2
amplitude = 2.0
"""

example_blowup_config = """
[domain]
preset = unit_square
h = 0.5

[model]
preset = custom
coefficients = pure_diffusion
reaction_u = u**2

[time]
t_end = 2.0
tau0 = 0.005
tau_min = 1e-7
blowup_linf = 50
max_relative_change = 0.1

[initial.u]
value = 1
"""
