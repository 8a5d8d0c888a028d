// Availability plugin: a shared roster where clicking a name toggles
// whether that person is available this week.
//
// Grammar: one persisted datagram per person, payload =
// { player: string, available: boolean }. Adding a person creates it,
// clicking their name updates it (toggle), the x button deletes it.

export function mount(container, wrapper) {
  container.innerHTML = `
    <div class="availability-root">
      <ul class="availability-roster"></ul>
      <form class="availability-form">
        <input class="availability-name" placeholder="add player" autocomplete="off" required />
        <button type="submit">Add</button>
      </form>
    </div>
  `;
  const roster = container.querySelector(".availability-roster");
  const form = container.querySelector(".availability-form");
  const nameInput = container.querySelector(".availability-name");

  function rosterRecords() {
    return wrapper.messageHistory.filter(
      (record) => record.payload && typeof record.payload.player === "string"
    );
  }

  function render() {
    roster.innerHTML = "";
    for (const record of rosterRecords()) {
      const item = document.createElement("li");
      item.className = record.payload.available
        ? "availability-row is-available"
        : "availability-row is-away";

      const name = document.createElement("button");
      name.type = "button";
      name.className = "availability-toggle";
      name.textContent = record.payload.player;
      name.addEventListener("click", () => {
        wrapper.sendUpdateMessage(
          { player: record.payload.player, available: !record.payload.available },
          record.datagramID
        );
      });

      const state = document.createElement("span");
      state.className = "availability-state";
      state.textContent = record.payload.available ? "available" : "away";

      const remove = document.createElement("button");
      remove.type = "button";
      remove.className = "availability-remove";
      remove.textContent = "×";
      remove.addEventListener("click", () => {
        wrapper.sendDeleteMessage(record.datagramID);
      });

      item.append(name, state, remove);
      roster.appendChild(item);
    }
  }

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const player = nameInput.value.trim();
    if (player === "") return;
    wrapper.sendCreateMessage({ player, available: false });
    nameInput.value = "";
  });

  container.addEventListener("history-changed", render);
  render();
}
