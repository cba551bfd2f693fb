/** Bootstraps the viewer against the serving engine and wires the panels. */

import { ApiClient, ApiError } from './api.js';
import { buildGraph } from './graph.js';
import { highlightForOutcome } from './highlight.js';
import { renderGraph, subnetLegend, verdictBadge } from './render.js';
import { exportSession, parseSession, replaySession } from './session.js';
import { SessionStore } from './state.js';
import type { AlternativeDoc, MitigationDoc, ModelDoc } from './types.js';

const api = new ApiClient('');
const store = new SessionStore();
let model: ModelDoc | null = null;

function element<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) {
    throw new Error(`missing #${id}`);
  }
  return found as T;
}

function mitigations(current: ModelDoc): MitigationDoc[] {
  const out: MitigationDoc[] = [];
  for (const channel of current.channels) {
    for (const drop of channel.flow.drops ?? []) {
      out.push(drop);
    }
  }
  return out.sort((a, b) => a.id.localeCompare(b.id));
}

function setStatus(text: string, isError = false): void {
  const status = element<HTMLElement>('status');
  status.textContent = text;
  status.classList.toggle('error', isError);
}

async function refreshVerdicts(): Promise<void> {
  const seq = store.beginRequest();
  if (store.edits.length === 0) {
    store.acceptResponse(seq, null);
    redraw();
    return;
  }
  setStatus('assessing…');
  try {
    const delta = await api.postWhatIf([...store.edits]);
    if (store.acceptResponse(seq, delta)) {
      setStatus('');
      redraw();
    }
  } catch (error) {
    if (error instanceof ApiError) {
      setStatus(`${error.message} ${error.diagnostics.join('; ')}`, true);
    } else {
      setStatus(String(error), true);
    }
  }
}

function redraw(): void {
  if (!model || !store.assessments) {
    return;
  }
  const expandable = new Set(
    model.channels.filter(c => c.definition).map(c => c.id));
  const graph = buildGraph(model, store.expandedChannels, expandable);
  const assessment = store.baseAssessments()
    .find(a => store.selectedOutcome !== null
      && (a.outcome === store.selectedOutcome
        || a.label === store.selectedOutcome));
  const marks = highlightForOutcome(
    model, assessment, store.removedMitigations());
  const canvas = document.getElementById('canvas') as
    unknown as SVGSVGElement;
  renderGraph(canvas, model, graph, marks, {
    onExpand: (id) => { store.toggleExpanded(id); redraw(); },
    onCollapse: (id) => { store.toggleExpanded(id); redraw(); },
  });
  renderOutcomePanel();
  renderMitigationPanel();
  renderAlternativePanel();
}

function renderOutcomePanel(): void {
  const panel = element<HTMLElement>('outcomes');
  panel.innerHTML = '';
  const verdicts = store.verdicts();
  for (const assessment of store.baseAssessments()) {
    const row = document.createElement('div');
    row.className = 'outcome-row'
      + (store.selectedOutcome === assessment.outcome ? ' selected' : '');
    const name = document.createElement('button');
    name.className = 'outcome-name';
    name.textContent = assessment.label === assessment.outcome
      ? assessment.outcome : `${assessment.label} (${assessment.outcome})`;
    name.addEventListener('click', () => {
      store.selectedOutcome = store.selectedOutcome === assessment.outcome
        ? null : assessment.outcome;
      redraw();
    });
    row.appendChild(name);
    row.appendChild(verdictBadge(verdicts.get(assessment.outcome)));
    panel.appendChild(row);
  }
}

function renderMitigationPanel(): void {
  if (!model) {
    return;
  }
  const panel = element<HTMLElement>('mitigations');
  panel.innerHTML = '';
  for (const mitigation of mitigations(model)) {
    const spec = `remove-mitigation:${mitigation.id}`;
    const row = document.createElement('label');
    row.className = 'toggle-row';
    const box = document.createElement('input');
    box.type = 'checkbox';
    box.checked = !store.hasEdit(spec); // checked = mitigation active
    box.addEventListener('change', () => {
      store.toggleEdit(spec);
      void refreshVerdicts();
    });
    row.appendChild(box);
    const text = document.createElement('span');
    text.textContent = mitigation.id
      + (mitigation.conditional ? ' (conditional)' : '');
    text.title = `${mitigation.note} — drops ${mitigation.tags.join(', ')}`;
    row.appendChild(text);
    panel.appendChild(row);
  }
}

function renderAlternativePanel(): void {
  if (!model) {
    return;
  }
  const panel = element<HTMLElement>('alternatives');
  panel.innerHTML = '';
  for (const alternative of model.alternatives as AlternativeDoc[]) {
    const group = document.createElement('div');
    group.className = 'alt-group';
    const title = document.createElement('div');
    title.className = 'alt-title';
    title.textContent = alternative.id;
    group.appendChild(title);
    for (const variant of alternative.variants) {
      const spec = `choose:${alternative.id}:${variant.name}`;
      const row = document.createElement('label');
      row.className = 'toggle-row';
      const radio = document.createElement('input');
      radio.type = 'radio';
      radio.name = `alt-${alternative.id}`;
      radio.checked = store.hasEdit(spec);
      radio.addEventListener('change', () => {
        for (const other of alternative.variants) {
          const otherSpec = `choose:${alternative.id}:${other.name}`;
          if (store.hasEdit(otherSpec)) {
            store.toggleEdit(otherSpec);
          }
        }
        store.toggleEdit(spec);
        void refreshVerdicts();
      });
      row.appendChild(radio);
      row.appendChild(document.createTextNode(variant.name));
      group.appendChild(row);
    }
    const clear = document.createElement('button');
    clear.textContent = 'both configurations';
    clear.className = 'alt-clear';
    clear.addEventListener('click', () => {
      for (const variant of alternative.variants) {
        const spec = `choose:${alternative.id}:${variant.name}`;
        if (store.hasEdit(spec)) {
          store.toggleEdit(spec);
        }
      }
      void refreshVerdicts();
    });
    group.appendChild(clear);
    panel.appendChild(group);
  }
}

function wireSessionButtons(): void {
  element<HTMLButtonElement>('export').addEventListener('click', () => {
    const session = exportSession(store);
    const blob = new Blob([JSON.stringify(session, null, 2)],
                          { type: 'application/json' });
    const link = document.createElement('a');
    link.href = URL.createObjectURL(blob);
    link.download = 'ifm-session.json';
    link.click();
    URL.revokeObjectURL(link.href);
  });

  const fileInput = element<HTMLInputElement>('import-file');
  element<HTMLButtonElement>('import').addEventListener('click', () => {
    fileInput.click();
  });
  fileInput.addEventListener('change', async () => {
    const file = fileInput.files?.[0];
    if (!file) {
      return;
    }
    try {
      const session = parseSession(await file.text());
      const replay = await replaySession(api, session);
      store.edits = [...session.edits];
      const seq = store.beginRequest();
      store.acceptResponse(
        seq, session.edits.length > 0
          ? await api.postWhatIf(session.edits) : null);
      setStatus(replay.identical
        ? 'session replayed: verdicts identical'
        : `session replayed with differences: `
          + replay.differences.join('; '), !replay.identical);
      redraw();
    } catch (error) {
      setStatus(String(error), true);
    } finally {
      fileInput.value = '';
    }
  });

  element<HTMLButtonElement>('reset').addEventListener('click', () => {
    store.edits = [];
    const seq = store.beginRequest();
    store.acceptResponse(seq, null);
    setStatus('');
    redraw();
  });
}

function wireConfigurationSelect(): void {
  const select = element<HTMLSelectElement>('configuration');
  select.innerHTML = '';
  for (const name of store.configurationNames()) {
    const option = document.createElement('option');
    option.value = name;
    option.textContent = name;
    select.appendChild(option);
  }
  select.value = store.configuration;
  select.addEventListener('change', () => {
    store.configuration = select.value;
    redraw();
  });
}

async function boot(): Promise<void> {
  setStatus('loading model…');
  try {
    const [loadedModel, assessments] = await Promise.all([
      api.getModel(), api.getAssessments()]);
    model = loadedModel;
    store.loadSnapshot(assessments);
    element<HTMLElement>('legend-slot').appendChild(subnetLegend(model));
    wireConfigurationSelect();
    wireSessionButtons();
    setStatus('');
    redraw();
  } catch (error) {
    setStatus(`cannot reach the engine: ${String(error)}`, true);
  }
}

void boot();
