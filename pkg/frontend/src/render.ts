import { fetchChunk } from "./api";
import { renderBarChart } from "./chart";
import type { AnswerEnvelope, Citation, ResultTable } from "./types";

export function renderResultTable(table: ResultTable): HTMLElement {
  const wrapper = document.createElement("div");
  wrapper.className = "result-table-wrapper";

  const el = document.createElement("table");
  el.className = "result-table";

  const thead = document.createElement("thead");
  const headerRow = document.createElement("tr");
  for (const [name] of table.columns) {
    const th = document.createElement("th");
    th.textContent = name;
    headerRow.appendChild(th);
  }
  thead.appendChild(headerRow);
  el.appendChild(thead);

  const tbody = document.createElement("tbody");
  for (const row of table.rows) {
    const tr = document.createElement("tr");
    for (const cell of row) {
      const td = document.createElement("td");
      td.textContent = cell === null ? "" : String(cell);
      tr.appendChild(td);
    }
    tbody.appendChild(tr);
  }
  el.appendChild(tbody);
  wrapper.appendChild(el);

  if (table.truncated) {
    const note = document.createElement("p");
    note.className = "table-truncated-note";
    note.textContent = "Result truncated; refine the question to see more rows.";
    wrapper.appendChild(note);
  }
  return wrapper;
}

function renderCitation(citation: Citation): HTMLElement {
  const item = document.createElement("li");
  item.className = "citation";

  const tag = document.createElement("button");
  tag.type = "button";
  tag.className = "citation-tag";
  tag.textContent = `[${citation.source} | ${citation.contract} | ${citation.clause}]`;

  const body = document.createElement("blockquote");
  body.className = "citation-text";
  body.hidden = true;

  let loaded = false;
  tag.addEventListener("click", async () => {
    if (!loaded) {
      loaded = true;
      try {
        const chunk = await fetchChunk(citation.chunk_id);
        body.textContent = chunk.text;
      } catch {
        loaded = false;
        body.textContent = "Could not load the clause text.";
      }
    }
    body.hidden = !body.hidden;
  });

  item.appendChild(tag);
  item.appendChild(body);
  return item;
}

export function renderCitations(citations: Citation[]): HTMLElement {
  if (citations.length === 0) {
    const badge = document.createElement("span");
    badge.className = "no-sources-badge";
    badge.textContent = "no sources";
    return badge;
  }
  const details = document.createElement("details");
  details.className = "citations";
  const summary = document.createElement("summary");
  summary.textContent = `${citations.length} source${citations.length === 1 ? "" : "s"}`;
  details.appendChild(summary);

  const list = document.createElement("ul");
  list.className = "citation-list";
  for (const citation of citations) {
    list.appendChild(renderCitation(citation));
  }
  details.appendChild(list);
  return details;
}

/** Builds the full display of one answer envelope. The envelope is
 *  read-only input; nothing here recomputes answers or chart data. */
export function renderEnvelope(envelope: AnswerEnvelope): HTMLElement {
  const turn = document.createElement("article");
  turn.className = "turn";

  const question = document.createElement("p");
  question.className = "turn-question";
  question.textContent = envelope.question;
  turn.appendChild(question);

  if (envelope.error !== null) {
    const notice = document.createElement("div");
    notice.className = "error-notice";
    notice.textContent = `${envelope.error}: ${envelope.answer_text}`;
    turn.appendChild(notice);
    return turn;
  }

  const answer = document.createElement("p");
  answer.className = "turn-answer";
  answer.textContent = envelope.answer_text;
  turn.appendChild(answer);

  turn.appendChild(renderCitations(envelope.citations));

  if (envelope.table !== null) {
    turn.appendChild(renderResultTable(envelope.table));
  }
  if (envelope.chart !== null) {
    turn.appendChild(renderBarChart(envelope.chart));
  }
  if (envelope.executed_sql !== null) {
    const sql = document.createElement("pre");
    sql.className = "executed-sql";
    sql.textContent = envelope.executed_sql;
    turn.appendChild(sql);
  }
  for (const warning of envelope.warnings) {
    const note = document.createElement("p");
    note.className = "warning-note";
    note.textContent = warning;
    turn.appendChild(note);
  }
  return turn;
}

/** Plain rendering for turns reloaded from server history, which keeps
 *  only the question and answer text. */
export function renderHistoryTurn(question: string, answer: string): HTMLElement {
  const turn = document.createElement("article");
  turn.className = "turn turn-history";

  const q = document.createElement("p");
  q.className = "turn-question";
  q.textContent = question;
  turn.appendChild(q);

  const a = document.createElement("p");
  a.className = "turn-answer";
  a.textContent = answer;
  turn.appendChild(a);
  return turn;
}
