"""Biaffine argument parser with discourse-derived arc coefficients.

Unit vectors pass through four feedforward projections; a bilinear
form with an augmented bias column scores every (dependent, head)
pair, and a second family of bilinear forms scores the argumentative
function of each arc. In the discourse-driven modes the arc scores
are multiplied cellwise by coefficients computed from the RST
dependency structure of the same units before decoding and before the
training softmax; the root column is never modulated. Decoding is a
maximum spanning arborescence with a single root child; dialectical
roles follow deterministically from the decoded functions.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import nnet
from .corpus import ArgumentFunction, ArgumentTree, DiscourseUnit, Role
from .decoder import greedy_heads, max_spanning_arborescence
from .encoder import build_matrix, make_root_vector
from .errors import AlignmentError, CheckpointError, DivergenceError, StructureError
from .nnet import FFLayer, ParamGroup, Tensor
from .rst import Direction, RelationInventory, RstDependencies, adjacency, inventory_for

MODE_BAP = "bap"
MODE_ADJACENCY = "dbap5"
MODE_LABELED = "dbap6"
MODE_LABELED_INV = "dbap7"
MODES = (MODE_BAP, MODE_ADJACENCY, MODE_LABELED, MODE_LABELED_INV)

SEG_GOLD = "gold"
SEG_E2E = "e2e"
SEGMENTATIONS = (SEG_GOLD, SEG_E2E)

GOLD_FUNCTIONS = (ArgumentFunction.CC, ArgumentFunction.SUPPORT, ArgumentFunction.ATTACK)
E2E_FUNCTIONS = GOLD_FUNCTIONS + (ArgumentFunction.SAME_ARG,)


@dataclass
class Hyperparams:
    """Training hyperparameters; defaults follow the experimental setup."""

    arc_dim: int = 100
    tag_dim: int = 50
    lr_encoder: float = 2e-5  # reserved for trainable encoders; inert here
    lr_head: float = 2e-6
    lr_coeff: float = 2e-2
    weight_decay: float = 0.1
    dropout: float = 0.2
    beta1: float = 0.9
    beta2: float = 0.9
    batch_size: int = 4
    epochs: int = 75
    patience: int = 10
    dev_fraction: float = 0.15

    def as_dict(self) -> dict:
        return dict(self.__dict__)

    @classmethod
    def from_dict(cls, data: Mapping) -> "Hyperparams":
        return cls(**{k: data[k] for k in cls().__dict__ if k in data})


class ModelParams:
    """All trainable state of one parser instance."""

    def __init__(
        self,
        mode: str,
        segmentation: str,
        d_lm: int,
        inventory: RelationInventory | None,
        hyper: Hyperparams,
        seed: int,
    ):
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        if segmentation not in SEGMENTATIONS:
            raise ValueError(f"unknown segmentation {segmentation!r}")
        if mode != MODE_BAP and inventory is None:
            raise ValueError(f"mode {mode} needs a relation inventory")
        self.mode = mode
        self.segmentation = segmentation
        self.d_lm = d_lm
        self.inventory = inventory
        self.hyper = hyper
        self.seed = seed
        self.functions = E2E_FUNCTIONS if segmentation == SEG_E2E else GOLD_FUNCTIONS

        head_ss, coeff_ss, root_ss = np.random.SeedSequence(seed).spawn(3)
        rng = np.random.default_rng(head_ss)
        self.ff_arc_parent = FFLayer.init(d_lm, hyper.arc_dim, rng)
        self.ff_arc_dep = FFLayer.init(d_lm, hyper.arc_dim, rng)
        self.ff_fun_parent = FFLayer.init(d_lm, hyper.tag_dim, rng)
        self.ff_fun_dep = FFLayer.init(d_lm, hyper.tag_dim, rng)
        # zero-initialized bilinear forms: all scores start neutral and
        # gradients stay well-defined
        self.arc_bilinear = Tensor(
            np.zeros((hyper.arc_dim + 1, hyper.arc_dim + 1)), requires_grad=True
        )
        self.arc_bias = Tensor(0.0, requires_grad=True)
        self.label_bilinear = {
            f: Tensor(np.zeros((hyper.tag_dim + 1, hyper.tag_dim + 1)), requires_grad=True)
            for f in self.functions
        }
        # coefficient parameters start at the identity gate (every cell 1)
        k = inventory.k if inventory is not None else 0
        self.coeff: dict[str, Tensor] = {}
        if mode == MODE_ADJACENCY:
            self.coeff["scale"] = Tensor(0.0, requires_grad=True)
            self.coeff["bias"] = Tensor(1.0, requires_grad=True)
        elif mode == MODE_LABELED:
            self.coeff["weights"] = Tensor(np.zeros(k), requires_grad=True)
            self.coeff["bias"] = Tensor(1.0, requires_grad=True)
        elif mode == MODE_LABELED_INV:
            self.coeff["weights_fwd"] = Tensor(np.zeros(k), requires_grad=True)
            self.coeff["bias_fwd"] = Tensor(0.5, requires_grad=True)
            self.coeff["weights_inv"] = Tensor(np.zeros(k), requires_grad=True)
            self.coeff["bias_inv"] = Tensor(0.5, requires_grad=True)
        self.root_vec = make_root_vector(d_lm, int(root_ss.generate_state(1)[0]))

    # -- parameter bookkeeping ------------------------------------------

    @property
    def ff_layers(self) -> list[FFLayer]:
        return [self.ff_arc_parent, self.ff_arc_dep, self.ff_fun_parent, self.ff_fun_dep]

    def head_weight_params(self) -> list[Tensor]:
        out = [layer.W for layer in self.ff_layers]
        out.append(self.arc_bilinear)
        out.extend(self.label_bilinear[f] for f in self.functions)
        return out

    def head_bias_params(self) -> list[Tensor]:
        return [layer.b for layer in self.ff_layers] + [self.arc_bias]

    def coeff_params(self) -> list[Tensor]:
        return [self.coeff[name] for name in sorted(self.coeff)]

    def named_tensors(self) -> dict[str, np.ndarray]:
        named = {"root_vec": self.root_vec}
        for prefix, layer in zip(
            ("ff_arc_parent", "ff_arc_dep", "ff_fun_parent", "ff_fun_dep"),
            self.ff_layers,
        ):
            named[f"{prefix}.W"] = layer.W.data
            named[f"{prefix}.b"] = layer.b.data
        named["arc_bilinear"] = self.arc_bilinear.data
        named["arc_bias"] = self.arc_bias.data
        for f in self.functions:
            named[f"label_bilinear.{f.value}"] = self.label_bilinear[f].data
        for name, tensor in self.coeff.items():
            named[f"coeff.{name}"] = tensor.data
        return named

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: arr.copy() for name, arr in self.named_tensors().items()}

    def load_state_dict(self, state: Mapping[str, np.ndarray]):
        for prefix, layer in zip(
            ("ff_arc_parent", "ff_arc_dep", "ff_fun_parent", "ff_fun_dep"),
            self.ff_layers,
        ):
            layer.W.assign(state[f"{prefix}.W"])
            layer.b.assign(state[f"{prefix}.b"])
        self.arc_bilinear.assign(state["arc_bilinear"])
        self.arc_bias.assign(state["arc_bias"])
        for f in self.functions:
            self.label_bilinear[f].assign(state[f"label_bilinear.{f.value}"])
        for name, tensor in self.coeff.items():
            tensor.assign(state[f"coeff.{name}"])
        self.root_vec = np.asarray(state["root_vec"], dtype=np.float64)

    def save(self, path: str | Path):
        meta = {
            "mode": self.mode,
            "segmentation": self.segmentation,
            "d_lm": self.d_lm,
            "seed": self.seed,
            "hyper": self.hyper.as_dict(),
            "functions": [f.value for f in self.functions],
        }
        if self.inventory is not None:
            meta["inventory"] = {
                "language": self.inventory.language.value,
                "version": self.inventory.version,
            }
        nnet.save_tensors(path, self.named_tensors(), meta)

    @classmethod
    def load(cls, path: str | Path) -> "ModelParams":
        named, meta = nnet.load_tensors(path)
        inventory = None
        if "inventory" in meta:
            from .corpus import Language

            inventory = inventory_for(Language(meta["inventory"]["language"]))
            if inventory.version != meta["inventory"]["version"]:
                raise CheckpointError(
                    f"checkpoint expects inventory {meta['inventory']['version']}, "
                    f"installed is {inventory.version}"
                )
        params = cls(
            mode=meta["mode"],
            segmentation=meta["segmentation"],
            d_lm=meta["d_lm"],
            inventory=inventory,
            hyper=Hyperparams.from_dict(meta["hyper"]),
            seed=meta["seed"],
        )
        params.load_state_dict(named)
        return params


@dataclass
class ScoredParse:
    """Raw and modulated arc scores plus per-arc function scores."""

    doc_id: str
    arc_scores: np.ndarray  # n x (n + 1)
    coefficients: np.ndarray  # n x (n + 1); all ones without discourse
    scores: np.ndarray  # modulated arc scores
    label_scores: np.ndarray  # n x (n + 1) x |functions|
    functions: tuple[ArgumentFunction, ...]
    segmentation: str
    decoded: ArgumentTree | None = None


def _discourse_coefficients(
    params: ModelParams, rst: RstDependencies, n: int
) -> Tensor:
    """Cellwise gate over non-root arc scores, derived from RST arcs."""
    a_adj, a_full = adjacency(rst, params.inventory, n)
    if params.mode == MODE_ADJACENCY:
        gate = nnet.add(nnet.mul(params.coeff["scale"], Tensor(a_adj)), params.coeff["bias"])
    elif params.mode == MODE_LABELED:
        pre = nnet.add(
            nnet.vecdot_last(Tensor(a_full), params.coeff["weights"]),
            params.coeff["bias"],
        )
        gate = nnet.relu(pre)
    elif params.mode == MODE_LABELED_INV:
        fwd = nnet.relu(
            nnet.add(
                nnet.vecdot_last(Tensor(a_full), params.coeff["weights_fwd"]),
                params.coeff["bias_fwd"],
            )
        )
        inv = nnet.relu(
            nnet.add(
                nnet.vecdot_last(
                    Tensor(np.ascontiguousarray(a_full.transpose(1, 0, 2))),
                    params.coeff["weights_inv"],
                ),
                params.coeff["bias_inv"],
            )
        )
        gate = nnet.add(fwd, inv)
    else:
        raise ValueError(f"mode {params.mode} has no discourse coefficients")
    # the fictional root takes part in no discourse relation
    return nnet.concat_cols([Tensor(np.ones((n, 1))), gate])


def _forward(
    params: ModelParams,
    units: np.ndarray,
    rst: RstDependencies | None,
    training: bool,
    rng: np.random.Generator | None,
):
    """Shared forward pass; returns hidden rows and modulated arc scores.

    ``units`` holds one embedding row per discourse unit; the model's
    stored root vector becomes row 0 of the scored matrix.
    """
    V = build_matrix(np.asarray(units, dtype=np.float64), params.root_vec)
    n = V.n
    if params.mode != MODE_BAP:
        if rst is None:
            raise AlignmentError(f"mode {params.mode} requires RST dependencies")
        if rst.n != n:
            raise AlignmentError(
                f"embedding matrix has {n} units but RST dependencies have {rst.n}"
            )
    X = Tensor(V.V)
    rate = params.hyper.dropout
    if training:
        X = nnet.dropout(X, rate, rng, True)
    h_arc_par = params.ff_arc_parent(X)
    h_arc_dep = params.ff_arc_dep(X)
    h_fun_par = params.ff_fun_parent(X)
    h_fun_dep = params.ff_fun_dep(X)
    if training:
        h_arc_par = nnet.dropout(h_arc_par, rate, rng, True)
        h_arc_dep = nnet.dropout(h_arc_dep, rate, rng, True)
        h_fun_par = nnet.dropout(h_fun_par, rate, rng, True)
        h_fun_dep = nnet.dropout(h_fun_dep, rate, rng, True)

    dep_rows = nnet.gather_rows(h_arc_dep, list(range(1, n + 1)))
    raw = nnet.bilinear_scores(dep_rows, h_arc_par, params.arc_bilinear, params.arc_bias)
    if params.mode == MODE_BAP:
        coeffs = None
        modulated = raw
    else:
        coeffs = _discourse_coefficients(params, rst, n)
        if nnet.checked() and params.mode in (MODE_LABELED, MODE_LABELED_INV):
            assert (coeffs.data >= 0).all(), "negative discourse coefficient"
        modulated = nnet.mul(raw, coeffs)
    return h_fun_par, h_fun_dep, raw, coeffs, modulated


def score(
    params: ModelParams,
    units: np.ndarray,
    rst: RstDependencies | None = None,
    doc_id: str = "",
) -> ScoredParse:
    """Inference-time scoring of every arc and every arc function."""
    n = np.asarray(units).shape[0]
    h_fun_par, h_fun_dep, raw, coeffs, modulated = _forward(params, units, rst, False, None)
    fun_dep_rows = nnet.gather_rows(h_fun_dep, list(range(1, n + 1)))
    label_scores = np.stack(
        [
            nnet.bilinear_scores(fun_dep_rows, h_fun_par, params.label_bilinear[f], 0.0).data
            for f in params.functions
        ],
        axis=2,
    )
    return ScoredParse(
        doc_id=doc_id,
        arc_scores=raw.data,
        coefficients=coeffs.data if coeffs is not None else np.ones((n, n + 1)),
        scores=modulated.data,
        label_scores=label_scores,
        functions=params.functions,
        segmentation=params.segmentation,
    )


def decode(scored: ScoredParse, greedy: bool = False) -> ArgumentTree:
    """Build the argument tree from a scored parse.

    The root arc is always the central claim; other arcs take their
    best-scoring function, never cc, and never same-arg under gold
    segmentation.
    """
    heads = greedy_heads(scored.scores) if greedy else max_spanning_arborescence(scored.scores)
    allowed = [
        i
        for i, f in enumerate(scored.functions)
        if f != ArgumentFunction.CC
        and not (f == ArgumentFunction.SAME_ARG and scored.segmentation == SEG_GOLD)
    ]
    functions: dict[int, ArgumentFunction] = {}
    for dep, head in heads.items():
        if head == 0:
            functions[dep] = ArgumentFunction.CC
        else:
            cell = scored.label_scores[dep - 1, head]
            best = max(allowed, key=lambda i: cell[i])
            functions[dep] = scored.functions[best]
    tree = ArgumentTree(doc_id=scored.doc_id, heads=heads, functions=functions)
    scored.decoded = tree
    return tree


def infer_roles(tree: ArgumentTree) -> ArgumentTree:
    """Derive pro/opp roles from the function-labeled tree.

    The central claim speaks for the proponent; an attack arc flips
    the parent's role, every other function preserves it.
    """
    if tree.functions is None:
        raise StructureError(f"{tree.doc_id}: cannot infer roles without functions")
    roles: dict[int, Role] = {}
    root = tree.root
    if tree.functions[root] != ArgumentFunction.CC:
        raise StructureError(f"{tree.doc_id}: root arc is not the central claim")
    roles[root] = Role.PRO
    stack = [root]
    while stack:
        node = stack.pop()
        for child in tree.children(node):
            if tree.functions[child] == ArgumentFunction.ATTACK:
                roles[child] = Role.OPP if roles[node] == Role.PRO else Role.PRO
            else:
                roles[child] = roles[node]
            stack.append(child)
    return replace(tree, roles=roles)


def parse_document(
    params: ModelParams,
    units: np.ndarray,
    rst: RstDependencies | None = None,
    doc_id: str = "",
    greedy: bool = False,
) -> ArgumentTree:
    """Score, decode, and assign roles in one call."""
    return infer_roles(decode(score(params, units, rst, doc_id=doc_id), greedy=greedy))


# -- training --------------------------------------------------------------


@dataclass
class Instance:
    """One training or evaluation item: a document's tensors plus gold."""

    doc_id: str
    units: np.ndarray  # one embedding row per discourse unit
    gold: ArgumentTree
    rst: RstDependencies | None = None


def instance_loss(
    params: ModelParams,
    inst: Instance,
    training: bool = True,
    rng: np.random.Generator | None = None,
) -> Tensor:
    """Arc cross-entropy over candidate heads plus function cross-entropy
    on the gold arcs."""
    n = inst.units.shape[0]
    h_fun_par, h_fun_dep, _, _, modulated = _forward(
        params, inst.units, inst.rst, training, rng
    )
    gold_heads = [inst.gold.heads[i] for i in range(1, n + 1)]
    arc_loss = nnet.softmax_xent_rows(modulated, gold_heads)

    fun_dep_rows = nnet.gather_rows(h_fun_dep, list(range(1, n + 1)))
    fun_head_rows = nnet.gather_rows(h_fun_par, gold_heads)
    dep_aug = nnet.augment_ones(fun_dep_rows)
    head_aug = nnet.augment_ones(fun_head_rows)
    ones = Tensor(np.ones((params.hyper.tag_dim + 1, 1)))
    per_function = []
    for f in params.functions:
        prod = nnet.mul(nnet.matmul(dep_aug, params.label_bilinear[f]), head_aug)
        per_function.append(nnet.reshape(nnet.matmul(prod, ones), (n,)))
    label_logits = nnet.stack_cols(per_function)
    gold_functions = [params.functions.index(inst.gold.functions[i]) for i in range(1, n + 1)]
    label_loss = nnet.softmax_xent_rows(label_logits, gold_functions)
    return nnet.add(arc_loss, label_loss)


def _las(pred: ArgumentTree, gold: ArgumentTree, exclude_same_arg: bool) -> tuple[int, int]:
    correct = total = 0
    for dep, head in gold.heads.items():
        if head == 0:
            continue
        if exclude_same_arg and gold.functions[dep] == ArgumentFunction.SAME_ARG:
            continue
        total += 1
        if pred.heads[dep] == head and pred.functions[dep] == gold.functions[dep]:
            correct += 1
    return correct, total


def _las_score(params: ModelParams, instances: Sequence[Instance]) -> float:
    exclude = params.segmentation == SEG_E2E
    correct = total = 0
    for inst in instances:
        pred = decode(score(params, inst.units, inst.rst, doc_id=inst.doc_id))
        c, t = _las(pred, inst.gold, exclude)
        correct += c
        total += t
    return 100.0 * correct / total if total else 100.0


@dataclass
class TrainResult:
    history: list[dict]
    best_epoch: int
    stopped_early: bool


def make_optimizer(params: ModelParams, freeze_coefficients: bool = False) -> nnet.Adam:
    """Three learning-rate groups: head weights and biases at the slow
    rate (weights also decay), discourse coefficients at the fast rate."""
    hyper = params.hyper
    groups = [
        ParamGroup(params.head_weight_params(), lr=hyper.lr_head, weight_decay=hyper.weight_decay),
        ParamGroup(params.head_bias_params(), lr=hyper.lr_head),
    ]
    if params.coeff and not freeze_coefficients:
        groups.append(ParamGroup(params.coeff_params(), lr=hyper.lr_coeff))
    return nnet.Adam(groups, beta1=hyper.beta1, beta2=hyper.beta2)


def train(
    params: ModelParams,
    instances: Sequence[Instance],
    dev: Sequence[Instance] = (),
    seed: int = 0,
    freeze_coefficients: bool = False,
    track_train_las: bool = False,
    max_epochs: int | None = None,
    stop_at_train_las: float | None = None,
) -> TrainResult:
    """Mini-batch training with early stopping on development LAS.

    Paraphrase augmentation happens upstream: every variant arrives as
    its own instance sharing the gold tree. Raises
    :class:`DivergenceError` with the last finite-loss snapshot if the
    loss leaves the reals.
    """
    if not instances:
        raise ValueError("empty training set")
    hyper = params.hyper
    epochs = max_epochs if max_epochs is not None else hyper.epochs
    optimizer = make_optimizer(params, freeze_coefficients)
    rng = np.random.default_rng(np.random.SeedSequence((params.seed, seed, 7)))
    history: list[dict] = []
    best_state = params.state_dict()
    best_las = -1.0
    best_epoch = -1
    bad_epochs = 0
    stopped_early = False

    for epoch in range(epochs):
        order = rng.permutation(len(instances))
        epoch_loss = 0.0
        for start in range(0, len(order), hyper.batch_size):
            batch = order[start : start + hyper.batch_size]
            optimizer.zero_grad()
            loss = None
            try:
                for i in batch:
                    item = instance_loss(params, instances[i], training=True, rng=rng)
                    loss = item if loss is None else nnet.add(loss, item)
            except ValueError as err:
                if "non-finite" not in str(err):
                    raise
                raise DivergenceError(
                    f"non-finite forward pass at epoch {epoch}", last_good=best_state
                ) from err
            value = float(loss.data)
            if not np.isfinite(value):
                raise DivergenceError(
                    f"non-finite loss at epoch {epoch}", last_good=best_state
                )
            loss.backward()
            optimizer.step()
            epoch_loss += value
        record: dict = {"epoch": epoch, "train_loss": epoch_loss}
        if track_train_las or stop_at_train_las is not None:
            record["train_las"] = _las_score(params, instances)
        if dev:
            record["dev_las"] = _las_score(params, dev)
            if record["dev_las"] > best_las:
                best_las = record["dev_las"]
                best_state = params.state_dict()
                best_epoch = epoch
                bad_epochs = 0
            else:
                bad_epochs += 1
        history.append(record)
        if stop_at_train_las is not None and record["train_las"] >= stop_at_train_las:
            best_state = params.state_dict()
            best_epoch = epoch
            break
        if dev and bad_epochs > hyper.patience:
            stopped_early = True
            break

    if dev and best_epoch >= 0:
        params.load_state_dict(best_state)
    return TrainResult(history=history, best_epoch=best_epoch, stopped_early=stopped_early)


# -- end-to-end gold construction -------------------------------------------


def attach_same_arg(
    edu_deps: RstDependencies,
    edus: Sequence[DiscourseUnit],
    adus: Sequence[DiscourseUnit],
    adu_tree: ArgumentTree,
) -> ArgumentTree:
    """Project an ADU-level gold tree onto EDU leaves.

    RST arcs inside one ADU keep their head and become same-arg arcs;
    each ADU's head EDU (the one attached outside the ADU) carries the
    ADU's argumentative arc to the head EDU of its parent ADU.
    """
    from .rst import assign_spans

    if edu_deps.n != len(edus):
        raise AlignmentError(
            f"{adu_tree.doc_id}: {len(edus)} EDUs but dependencies cover {edu_deps.n}"
        )
    edu_adu = assign_spans([e.span for e in edus], adus)  # 0-based ADU per EDU
    members: dict[int, list[int]] = {a: [] for a in range(len(adus))}
    for edu_idx, adu_idx in enumerate(edu_adu, start=1):
        members[adu_idx].append(edu_idx)
    empty = [adus[a].id for a, m in members.items() if not m]
    if empty:
        raise AlignmentError(f"{adu_tree.doc_id}: ADU(s) without EDUs: {', '.join(empty)}")
    if len(adus) != adu_tree.n:
        raise AlignmentError(f"{adu_tree.doc_id}: ADU count does not match the gold tree")

    heads: dict[int, int] = {}
    functions: dict[int, ArgumentFunction] = {}
    head_edu: dict[int, int] = {}
    for adu_idx, edu_list in members.items():
        internal = [
            e for e in edu_list
            if edu_deps.heads[e] != 0 and edu_adu[edu_deps.heads[e] - 1] == adu_idx
        ]
        external = [e for e in edu_list if e not in internal]
        head_edu[adu_idx] = external[0]
        for e in internal:
            heads[e] = edu_deps.heads[e]
            functions[e] = ArgumentFunction.SAME_ARG
        # several externally attached EDUs inside one ADU collapse onto
        # the first one so the ADU stays a single argumentative block
        for e in external[1:]:
            heads[e] = external[0]
            functions[e] = ArgumentFunction.SAME_ARG

    for adu_idx in range(len(adus)):
        dep_index = adu_idx + 1
        parent = adu_tree.heads[dep_index]
        e = head_edu[adu_idx]
        if parent == 0:
            heads[e] = 0
            functions[e] = ArgumentFunction.CC
        else:
            heads[e] = head_edu[parent - 1]
            functions[e] = adu_tree.functions[dep_index]
    return ArgumentTree(doc_id=adu_tree.doc_id, heads=heads, functions=functions)


# -- learned coefficient export ---------------------------------------------


@dataclass(frozen=True)
class CoefficientRow:
    relation: str
    direction: str  # "fwd" or "inv"
    value: float


def export_coefficients(params: ModelParams) -> list[CoefficientRow]:
    """Read out the learned gate value for every directed relation."""
    if params.mode not in (MODE_LABELED, MODE_LABELED_INV):
        raise ValueError(f"mode {params.mode} has no per-relation coefficients")
    inventory = params.inventory
    rows: list[CoefficientRow] = []
    for label in inventory.labels:
        fwd_idx = inventory.directed_index(label, Direction.FORWARD)
        inv_idx = inventory.directed_index(label, Direction.INVERTED)
        if params.mode == MODE_LABELED:
            w = params.coeff["weights"].data
            b = float(params.coeff["bias"].data)
            fwd = max(0.0, float(w[fwd_idx]) + b)
            inv = max(0.0, float(w[inv_idx]) + b)
        else:
            wf = params.coeff["weights_fwd"].data
            wi = params.coeff["weights_inv"].data
            fwd = max(0.0, float(wf[fwd_idx]) + float(params.coeff["bias_fwd"].data))
            inv = max(0.0, float(wi[fwd_idx]) + float(params.coeff["bias_inv"].data))
        rows.append(CoefficientRow(label, "fwd", fwd))
        rows.append(CoefficientRow(label, "inv", inv))
    return rows


@dataclass(frozen=True)
class CoefficientSummary:
    relation: str
    direction: str
    mean: float
    std: float
    bucket: str


def aggregate_coefficients(
    tables: Sequence[Sequence[CoefficientRow]], dispersion_threshold: float = 0.5
) -> list[CoefficientSummary]:
    """Mean, spread, and qualitative bucket per directed relation.

    Relations whose mean gate exceeds 1 amplify argumentative arcs
    (companions); at or below 1 they penalize (opposing). High
    dispersion across folds downgrades either to its vague variant.
    """
    if not tables:
        raise ValueError("no coefficient tables to aggregate")
    keys = [(row.relation, row.direction) for row in tables[0]]
    out = []
    for relation, direction in keys:
        values = []
        for table in tables:
            values.extend(
                r.value for r in table if r.relation == relation and r.direction == direction
            )
        mean = sum(values) / len(values)
        std = (sum((v - mean) ** 2 for v in values) / len(values)) ** 0.5
        if std <= dispersion_threshold:
            bucket = "companion" if mean > 1.0 else "opposing"
        else:
            bucket = "vaguely-correlated" if mean > 1.0 else "vaguely-opposed"
        out.append(CoefficientSummary(relation, direction, mean, std, bucket))
    return out


def coefficients_tsv(summaries: Sequence[CoefficientSummary]) -> str:
    lines = ["relation\tdirection\tmean\tstd\tbucket"]
    for s in summaries:
        lines.append(f"{s.relation}\t{s.direction}\t{s.mean:.4f}\t{s.std:.4f}\t{s.bucket}")
    return "\n".join(lines) + "\n"
