"""
凯勒几何数值实验室配置文件
"""

# =============================================================================
# 数值容差
# =============================================================================

TOLERANCES = {
    # 逐点几何
    "HERMITIAN": 1e-12,         # 度量埃尔米特对称性
    "SYMMETRY": 1e-8,           # 曲率张量凯勒对称性 / 缩并恒等式
    "ZERO": 1e-10,              # 平坦模型上"为零"的判定
    "ORTHONORMAL": 1e-10,       # 标架正交归一性
    "ROYDEN": 1e-8,             # Royden 型不等式的松弛下限
    "BERGER": 1e-3,             # Berger 恒等式相对误差

    # 流
    "EXISTENCE_DELTA": 0.02,    # 存在时间下界 1/(nA) 的相对余量
    "BLOWUP_DELTA": 0.02,       # 爆破速率 1/n 的相对余量
    "TRACE_BOUND_REL": 1e-3,    # M(t) <= n/(1-nAt) 的相对容差
    "TRACE_EVOLUTION": 1e-2,    # 迹演化不等式的离散容差
    "CLASS_VOLUME_REL": 1e-4,   # 体积与上同调类公式的相对偏差
    "FUNCTIONAL_IDENTITY": 1e-2,  # 归一化流积分恒等式相对误差
    "DECAY_RATE": 0.05,         # 衰减指数拟合的容差

    # 连续性方程
    "WY_RESIDUAL_REL": 1e-6,    # Ric(w)+w-t*w_ref 相对残差
    "WY_CERTIFICATE": 1e-8,     # 证书中的类/界比较

    # 示性类
    "CW_SLACK": 1e-6,           # Chern-Weil 不等式松弛
    "CHERN_NUMBER": 1e-2,       # 陈数的求积容差

    # 类序列 / mu 估计
    "PROPERTY_A_TAIL": 0.05,    # mu_i*alpha_i 末项相对首项最大值的比例
    "PROPERTY_A_ABS": 1e-12,    # 绝对意义下视为零
    "MU_SANDWICH": 1e-3,        # mu 上下界夹逼
    "HSC_BOUND": 1e-8,          # sup H <= A 判定
}

# =============================================================================
# 度量与曲率
# =============================================================================

METRIC_PARAMS = {
    "EIGEN_FLOOR": 1e-12,       # 度量正定性下限（绝对）
    "FD_STEP": 1e-2,            # 网格势函数的有限差分步长
    "FD_ORDER_STEPS": (0.1, 0.05),  # 收敛阶测试的两组步长
    "FD_ORDER_POINT": (0.2 + 0.1j,),  # 收敛阶测试点
}

HSC_SEARCH = {
    "RESTARTS": 16,             # 随机重启次数
    "ITERATIONS": 200,          # 每次投影梯度上升的迭代数
    "TOLERANCE": 1e-13,         # 目标值停止阈值
    "STEP": 1.0,                # 初始步长
    "MAX_HALVINGS": 30,         # 单步最多折半次数
}

BERGER_PARAMS = {
    "DIRECTIONS": (64, 64),     # 方向求积分辨率（矩坐标 x 相位）
}

# =============================================================================
# 求积
# =============================================================================

QUADRATURE = {
    "TORUS_GRID": 8,            # 每个复一维因子每个实方向的节点数（n=2 时共 64^2 个点）
    "PROJECTIVE_NODES": 24,     # 单形方向 Gauss-Legendre 节点数
    "PROJECTIVE_ANGLES": 1,     # 每个相位方向的节点数（U(n) 不变被积函数只需 1）
}

# =============================================================================
# 凯勒-里奇流
# =============================================================================

FLOW_PARAMS = {
    "RADIAL_GRID": 512,         # 径向 ansatz 网格
    "TUBE_GRID": 64,            # 管状环面 ansatz 每个方向网格
    "HORIZON": 1.0,             # 默认积分时长
    "SNAPSHOTS": 50,            # 均匀快照数
    "RTOL": 1e-7,
    "ATOL": 1e-10,
    "EIGEN_FLOOR": 1e-6,        # 相对初始度量的最小特征值下限
    "DT_UNDERFLOW": 1e-13,      # 步长下溢阈值
    "RESIDUAL_CAP": 1.0,        # 步残差发散阈值
    "POLE_MARGIN": 0.15,        # 切向量在 theta=0 附近的排除角
    "MAX_STEPS": 2_000_000,
    "BLOWUP_WINDOW": 0.9,       # (T-t)·sup H 只在 t <= 0.9 T 上检查
    "HSC_RESTARTS": 2,          # 快照上 sup H 的随机重启数（另有上一快照的热启动）
}

# =============================================================================
# 连续性方程
# =============================================================================

CONTINUITY_PARAMS = {
    "RADIAL_GRID": 512,
    "TUBE_GRID": 64,
    "NEWTON_MAX_ITER": 60,
    "NEWTON_TOL": 1e-10,        # 相对残差停止阈值（差分舍入约 1e-11）
    "STEP_TOL": 1e-13,          # 相对步长停止阈值
    "MAX_HALVINGS": 40,         # 线搜索折半次数
    "ARMIJO": 1e-4,             # 充分下降常数
    "QUADRATIC_C": 100.0,       # 二次收敛比值检验 r_{k+1} <= C r_k^2（仅无阻尼步）
    "RESIDUAL_FLOOR": 1e-10,    # 低于此值的残差视为舍入水平，不参与比值检验
}

# =============================================================================
# mu 估计
# =============================================================================

MU_SEARCH = {
    "BUDGET": 400,              # Nelder-Mead 总函数评估预算
    "RESTARTS": 3,              # 随机重启次数（基准成员之外）
    "BOX": 0.05,                # 随机初值的参数范围
    "XATOL": 1e-6,
    "FATOL": 1e-9,
}

# =============================================================================
# 命令行与报告
# =============================================================================

CLI_CONFIG = {
    "EXIT_PASS": 0,
    "EXIT_FAIL": 1,
    "EXIT_CONFIG": 2,
    "DEFAULT_OUT": "out",
    "SCENARIO_GLOB": "*.json",
    "TASKS": (
        "curvature", "hsc-sup", "flow", "normalized-flow", "continuity",
        "chern", "my-audit", "mu-bounds", "expansion",
    ),
}

LOGGING_CONFIG = {
    "FORMAT": "%(name)s:%(levelname)s:%(message)s",
    "LEVEL": "INFO",
}

# 每项检查对应的不等式（报告中的锚点）
CHECK_ANCHORS = {
    "class_pairing": "top intersection pairing vs quadrature of the volume form",
    "property_A_limit": "class sequence mu_i*alpha_i -> 0 forces c1(K_X) nef",
    "curvature_zero": "flat model: curvature, H, S, c1, c2 vanish",
    "fs_constants": "Fubini-Study: H = 2/c, Ric = (n+1)g/c",
    "kahler_symmetry": "Kaehler symmetries and Ricci contraction of R",
    "sup_hsc": "sup_X H over sample points and unit directions",
    "hsc_bound": "declared curvature bound: sup_X H <= A",
    "royden": "Schwarz-type bound gg R <= A (tr_hat omega)^2",
    "royden_nonpositive": "for A <= 0: gg R <= A (n+1)/(2n) (tr_hat omega)^2",
    "royden_refined": "orthogonal frame: sum R <= A/2 ((sum|xi|^2)^2 + sum|xi|^4)",
    "berger": "average of H over directions equals 2S/(n(n+1))",
    "product_hsc": "product metric: sup H <= A1 + A2",
    "rational_curve": "rational curve C: sup H >= pi/(32 int_C omega)",
    "mu_lower": "mu >= C_n 2pi c1.alpha^(n-1)/alpha^n",
    "mu_upper": "mu <= sup H of any metric in the class",
    "mu_sandwich": "lower and upper mu estimates agree",
    "nef_threshold": "nef threshold lambda >= 1/(n mu)",
    "fd_order": "finite-difference curvature converges at the stencil order",
    "expected_values": "measured quantities vs closed-form values",
    "existence": "existence time T >= 1/(nA)",
    "singular_time": "detected singular time vs the class-level threshold",
    "trace_bound": "trace bound M(t) <= n/(1-nAt)",
    "trace_evolution": "(d/dt - Laplacian) tr omega_hat <= A (tr omega_hat)^2",
    "blowup_rate": "blow-up rate (T-t) sup H >= 1/n",
    "cohomology": "volume equals the cohomological class law",
    "flow_identity": "int|Ric+w|^2 = d/dt int S + int (S+1)(S+n)",
    "flow_decay": "L(t) = e^((n-nu-2)t) int S w^n <= C e^(-2t)",
    "sup_rm": "sup |Rm| along the flow (reported only)",
    "wu_yau": "Ric(w(t)) = -w(t) + t w_ref",
    "wu_yau_closed_form": "Einstein reference: w(t) = (t - (n+1)/c) w_ref",
    "trace_estimate": "tr_w(t) w_ref <= 1/eps and |w_ref|^2 <= n/eps^2",
    "family_case1": "Ric+w = 2n eps w_ref, int|Ric+w|^2 <= 4n^3 vol",
    "family_case2": "Ric+w = 3n mu w_ref, int|Ric+w|^2 <= 9n^3 vol",
    "chern_numbers": "Chern-Weil integrals vs class arithmetic",
    "my_defect": "(2(n+1)/n c2 - c1^2)(-c1)^(n-2) >= 0",
    "my_weighted": "(2(n+1)/n c2 - c1^2)(-c1)^nu alpha^(n-nu-2) >= 0",
    "cw_audit": "defect.[w]^(n-2) >= -(n+2)/(4pi^2 n^2 (n-1)) int|Ric+w|^2",
    "expansion": "eps^-(n-nu-2) defect.(2pi K + s beta)^(n-2) -> binomial limit",
    "volume_decay": "eps^-(n-nu-2) [w]^n = O(eps^2)",
    "class_decay": "class functional decays like e^(-2t)",
}

# =============================================================================
# 图表
# =============================================================================

CHART_CONFIG = {
    "HEIGHT": 900,
    "TEMPLATE": "plotly_white",
    "COLORS": {
        "primary": "#2962FF",
        "secondary": "#00BFA5",
        "bound": "#FF1744",
        "pass": "#00C853",
        "fail": "#FF1744",
        "neutral": "#757575",
    },
}
