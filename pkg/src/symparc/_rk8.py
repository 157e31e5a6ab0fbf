"""Coefficients of the 12-stage, order-8 explicit Runge-Kutta method of
Dormand and Prince (the propagation core of Hairer's DOP853).

Used as the high-order one-step method behind the step-halving reference
solver; kept separate from the additive-method machinery on purpose so the
oracle shares no code with the integrators it checks.
"""

import numpy as np

N_STAGES = 12

C = np.array([
    0,
    0.05260015195876773,
    0.078900227938151601,
    0.1183503419072274,
    0.28164965809277259,
    0.33333333333333331,
    0.25,
    0.30769230769230771,
    0.6512820512820513,
    0.59999999999999998,
    0.8571428571428571,
    1,
])

B = np.array([
    0.054293734116568765,
    0,
    0,
    0,
    0,
    4.4503128927524092,
    1.8915178993145003,
    -5.8012039600105849,
    0.3111643669578199,
    -0.15216094966251609,
    0.20136540080403034,
    0.044710615727772587,
])

A = np.array([
    [0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [0.05260015195876773, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [0.0197250569845379, 0.059175170953613701, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [0.029587585476806851, 0, 0.088762756430420545, 0, 0, 0, 0, 0, 0, 0, 0, 0],
    [0.24136513415926669, 0, -0.88454947932828609, 0.92483400326179199, 0, 0, 0, 0, 0, 0, 0, 0],
    [0.037037037037037035, 0, 0, 0.17082860872947386, 0.12546768756682242, 0, 0, 0, 0, 0, 0, 0],
    [0.037109375, 0, 0, 0.17025221101954405, 0.060216538980455959, -0.017578125, 0, 0, 0, 0, 0, 0],
    [0.037092000118504789, 0, 0, 0.17038392571223998, 0.10726203044637328, -0.015319437748624402, 0.0082737891638140233, 0, 0, 0, 0, 0],
    [0.62411095871607569, 0, 0, -3.3608926294469414, -0.86821934684172597, 27.59209969944671, 20.154067550477894, -43.489884181069961, 0, 0, 0, 0],
    [0.47766253643826434, 0, 0, -2.4881146199716677, -0.59029082683684297, 21.230051448181193, 15.279233632882423, -33.288210968984863, -0.020331201708508627, 0, 0, 0],
    [-0.9371424300859873, 0, 0, 5.1863724288440638, 1.0914373489967295, -8.1497870107469268, -18.520065659996959, 22.739487099350505, 2.4936055526796523, -3.0467644718982196, 0, 0],
    [2.273310147516538, 0, 0, -10.534495466737249, -2.0008720582248625, -17.958931863118799, 27.94888452941996, -2.8589982771350235, -8.8728569335306293, 12.360567175794303, 0.64339274601576357, 0],
])

A.setflags(write=False)
B.setflags(write=False)
C.setflags(write=False)
