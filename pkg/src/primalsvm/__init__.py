"""Primal SVM training: gradient descent, kernel Newton and Pegasos."""

from primalsvm.corpus import (CorpusStats, FeatureMode, Instance, RawRecord, Vocabulary,
                              binarize_label, build_vocabulary, corpus_stats, featurize,
                              make_instances, parse_tsv, read_tsv, synth_corpus, tokenize)
from primalsvm.evaluation import (CvConfig, CvReport, RunSpec, accuracy, cross_validate,
                                  split_round, sweep)
from primalsvm.numerics import KernelSpec, SparseVector, gram, kernel_eval, solve_spd
from primalsvm.optim import (GdConfig, NewtonConfig, PegasosConfig, gd_train, newton_train,
                             pegasos_train)
from primalsvm.svm import (BinarySvm, MulticlassSvm, fit_bias, predict_binary,
                           predict_multiclass, train_binary, train_multiclass)

__version__ = "0.1.0"
